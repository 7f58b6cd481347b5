use rand::Rng;

use super::{BoundaryPoint, GeometryError, Result, Shape};
use crate::vector::{Point, UnitVector, Vector};

#[derive(Debug, Clone, PartialEq)]
struct Face {
    vertices: Vec<Point>,
    /// Inward unit normal.
    normal: UnitVector,
    /// `normal · y = offset` on the face plane; interior points have `normal · y > offset`.
    offset: f64,
    area: f64,
    /// Cumulative area of the fan triangles `(v0, v_k, v_{k+1})`.
    fan_cum: Vec<f64>,
}

impl Face {
    fn signed_distance(&self, p: Point) -> f64 {
        self.normal.dot(p) - self.offset
    }

    fn fan_triangle(&self, k: usize) -> (Point, Point, Point) {
        (self.vertices[0], self.vertices[k + 1], self.vertices[k + 2])
    }

    fn fan_area(&self, k: usize) -> f64 {
        self.fan_cum[k + 1] - self.fan_cum[k]
    }

    /// Area coordinate of an in-face point: offset of its fan triangle plus
    /// `(1 - λ₀)² T`, which is uniform when the point is.
    fn area_coordinate(&self, p: Point) -> f64 {
        let n = self.normal.vec();
        let mut best = (f64::NEG_INFINITY, 0, 0.0);
        for k in 0..self.fan_cum.len() - 1 {
            let (a, b, c) = self.fan_triangle(k);
            let total = (b - a).cross(c - a).dot(n);
            if total == 0.0 {
                continue;
            }
            let la = (b - p).cross(c - p).dot(n) / total;
            let lb = (c - p).cross(a - p).dot(n) / total;
            let lc = 1.0 - la - lb;
            let worst = la.min(lb).min(lc);
            if worst > best.0 {
                best = (worst, k, la);
            }
        }
        let (_, k, la) = best;
        let s = (1.0 - la).clamp(0.0, 1.0);
        self.fan_cum[k] + s * s * self.fan_area(k)
    }
}

/// Convex polyhedron given by its planar convex faces.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolyhedron {
    faces: Vec<Face>,
    face_cum: Vec<f64>,
    vertices: Vec<Point>,
}

impl ConvexPolyhedron {
    pub fn new(faces: Vec<Vec<Point>>) -> Result<Self> {
        if faces.len() < 4 {
            return Err(GeometryError::InvalidDomain("polyhedron needs at least 4 faces".into()));
        }
        let mut vertices: Vec<Point> = Vec::new();
        for f in &faces {
            if f.len() < 3 || f.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::InvalidDomain("each face needs at least 3 finite vertices".into()));
            }
            for v in f {
                if !vertices.iter().any(|w| w.distance(*v) == 0.0) {
                    vertices.push(*v);
                }
            }
        }
        let centroid = vertices.iter().fold(Vector::ZERO, |acc, v| acc + *v) / vertices.len() as f64;
        let diameter = max_pair_distance(&vertices);
        let tol = 1e-9 * diameter;

        let mut built = Vec::with_capacity(faces.len());
        for (fi, verts) in faces.into_iter().enumerate() {
            // Newell normal
            let mut newell = Vector::ZERO;
            for i in 0..verts.len() {
                newell += verts[i].cross(verts[(i + 1) % verts.len()]);
            }
            let mut normal = UnitVector::new(newell)
                .ok_or_else(|| GeometryError::InvalidDomain(format!("face {fi} is degenerate")))?;
            if normal.dot(centroid - verts[0]) < 0.0 {
                normal = -normal;
            }
            let offset = normal.dot(verts[0]);
            if verts.iter().any(|v| (normal.dot(*v) - offset).abs() > tol) {
                return Err(GeometryError::InvalidDomain(format!("face {fi} is not planar")));
            }
            let mut fan_cum = vec![0.0];
            let mut orientation = 0.0_f64;
            for k in 0..verts.len() - 2 {
                let cross = (verts[k + 1] - verts[0]).cross(verts[k + 2] - verts[0]);
                let signed = cross.dot(normal.vec());
                if orientation * signed < 0.0 {
                    return Err(GeometryError::InvalidDomain(format!("face {fi} is not convex")));
                }
                if signed != 0.0 {
                    orientation = signed;
                }
                fan_cum.push(fan_cum[k] + 0.5 * cross.norm());
            }
            let area = *fan_cum.last().unwrap_or(&0.0);
            built.push(Face { vertices: verts, normal, offset, area, fan_cum });
        }
        for (fi, f) in built.iter().enumerate() {
            if vertices.iter().any(|v| f.signed_distance(*v) < -tol) {
                return Err(GeometryError::InvalidDomain(format!("polyhedron is not convex at face {fi}")));
            }
        }
        let closure = built.iter().fold(Vector::ZERO, |acc, f| acc + f.normal.vec() * f.area);
        let total: f64 = built.iter().map(|f| f.area).sum();
        if closure.norm() > 1e-9 * total {
            return Err(GeometryError::InvalidDomain("faces do not close a solid".into()));
        }
        let mut face_cum = vec![0.0];
        for f in &built {
            face_cum.push(face_cum.last().unwrap() + f.area);
        }
        Ok(ConvexPolyhedron { faces: built, face_cum, vertices })
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn cuboid(lo: Point, hi: Point) -> Result<Self> {
        let c = |x: bool, y: bool, z: bool| {
            Vector::new(if x { hi.x } else { lo.x }, if y { hi.y } else { lo.y }, if z { hi.z } else { lo.z })
        };
        let (f, t) = (false, true);
        Self::new(vec![
            vec![c(f, f, f), c(f, t, f), c(t, t, f), c(t, f, f)],
            vec![c(f, f, t), c(t, f, t), c(t, t, t), c(f, t, t)],
            vec![c(f, f, f), c(t, f, f), c(t, f, t), c(f, f, t)],
            vec![c(f, t, f), c(f, t, t), c(t, t, t), c(t, t, f)],
            vec![c(f, f, f), c(f, f, t), c(f, t, t), c(f, t, f)],
            vec![c(t, f, f), c(t, t, f), c(t, t, t), c(t, f, t)],
        ])
    }

    pub fn face_vertices(&self) -> impl Iterator<Item = &[Point]> {
        self.faces.iter().map(|f| f.vertices.as_slice())
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.faces[f].area
    }

    fn face_point(&self, f: usize, p: Point, eps_corner: f64) -> BoundaryPoint {
        let face = &self.faces[f];
        let position = p - face.normal.vec() * face.signed_distance(p);
        let is_regular = self
            .faces
            .iter()
            .enumerate()
            .all(|(g, other)| g == f || other.signed_distance(position) > eps_corner);
        BoundaryPoint {
            position,
            normal: face.normal,
            component: 0,
            patch_coord: self.face_cum[f] + face.area_coordinate(position),
            is_regular,
        }
    }

    /// Point on face `f` from three uniforms; uniform in area when they are.
    pub(crate) fn face_sample(&self, f: usize, u: f64, v: f64, w: f64, eps_corner: f64) -> BoundaryPoint {
        let face = &self.faces[f];
        let target = u * face.area;
        let k = face.fan_cum.partition_point(|&c| c <= target).clamp(1, face.fan_cum.len() - 1) - 1;
        let (a, b, c) = face.fan_triangle(k);
        let r = v.sqrt();
        let p = a * (1.0 - r) + b * (r * (1.0 - w)) + c * (r * w);
        self.face_point(f, p, eps_corner)
    }

    /// Fan triangles of every face, as `(face, a, b, c)`.
    pub fn triangles(&self) -> impl Iterator<Item = (usize, Point, Point, Point)> + '_ {
        self.faces
            .iter()
            .enumerate()
            .flat_map(|(fi, f)| (0..f.fan_cum.len() - 1).map(move |k| {
                let (a, b, c) = f.fan_triangle(k);
                (fi, a, b, c)
            }))
    }
}

fn max_pair_distance(v: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in v.iter().enumerate() {
        for b in &v[i + 1..] {
            d = d.max(a.distance(*b));
        }
    }
    d
}

impl Shape for ConvexPolyhedron {
    fn dim(&self) -> usize {
        3
    }

    fn diameter(&self) -> f64 {
        max_pair_distance(&self.vertices)
    }

    fn volume(&self) -> f64 {
        let centroid = self.vertices.iter().fold(Vector::ZERO, |acc, v| acc + *v) / self.vertices.len() as f64;
        self.faces.iter().map(|f| f.area * f.signed_distance(centroid) / 3.0).sum()
    }

    fn component_measures(&self) -> Vec<f64> {
        vec![*self.face_cum.last().unwrap()]
    }

    fn bounding_box(&self) -> (Point, Point) {
        let inf = f64::INFINITY;
        self.vertices.iter().fold(
            (Vector::new(inf, inf, inf), Vector::new(-inf, -inf, -inf)),
            |(lo, hi), v| {
                (
                    Vector::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z)),
                    Vector::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z)),
                )
            },
        )
    }

    fn contains(&self, p: Point, eps: f64) -> bool {
        self.faces.iter().all(|f| f.signed_distance(p) > eps)
    }

    fn ray_cast(&self, x: Point, u: Vector, eps: f64, eps_corner: f64) -> Option<BoundaryPoint> {
        let mut best: Option<(f64, usize)> = None;
        for (fi, f) in self.faces.iter().enumerate() {
            let un = f.normal.dot(u);
            if un >= 0.0 {
                continue;
            }
            let t = -f.signed_distance(x) / un;
            if t > eps && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, fi));
            }
        }
        let (t, fi) = best?;
        Some(self.face_point(fi, x + u * t, eps_corner))
    }

    fn locate(&self, p: Point, eps_corner: f64) -> (BoundaryPoint, f64) {
        let mut best: Option<(f64, usize)> = None;
        let mut fallback = (f64::INFINITY, 0);
        let tol = 1e-9 * self.diameter();
        for (fi, f) in self.faces.iter().enumerate() {
            let d = f.signed_distance(p);
            if d.abs() < fallback.0 {
                fallback = (d.abs(), fi);
            }
            let proj = p - f.normal.vec() * d;
            let inside = self
                .faces
                .iter()
                .enumerate()
                .all(|(g, other)| g == fi || other.signed_distance(proj) >= -tol);
            if inside && best.is_none_or(|(bd, _)| d.abs() < bd) {
                best = Some((d.abs(), fi));
            }
        }
        let (d, fi) = best.unwrap_or(fallback);
        (self.face_point(fi, p, eps_corner), d)
    }

    fn sample_boundary<R: Rng + ?Sized>(&self, _component: usize, rng: &mut R, eps_corner: f64) -> BoundaryPoint {
        let target = rng.gen::<f64>() * self.face_cum.last().unwrap();
        let f = self.face_cum.partition_point(|&c| c <= target).clamp(1, self.faces.len()) - 1;
        self.face_sample(f, rng.gen(), rng.gen(), rng.gen(), eps_corner)
    }

    fn segment_crossings(&self, p: Point, q: Point, eps: f64) -> Vec<f64> {
        let d = q - p;
        let mut out = Vec::new();
        for (fi, f) in self.faces.iter().enumerate() {
            let dn = f.normal.dot(d);
            if dn == 0.0 {
                continue;
            }
            let s = -f.signed_distance(p) / dn;
            if s <= 0.0 || s >= 1.0 {
                continue;
            }
            let y = p + d * s;
            if self.faces.iter().enumerate().all(|(g, o)| g == fi || o.signed_distance(y) >= -10.0 * eps) {
                out.push(s);
            }
        }
        out
    }

    fn is_convex(&self) -> bool {
        true
    }
}
