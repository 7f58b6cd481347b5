use rand::Rng;

use super::{BoundaryPoint, GeometryError, Result, Shape};
use crate::vector::{Point, UnitVector, Vector};

/// One closed boundary ring. The domain lies to the left of every edge.
#[derive(Debug, Clone, PartialEq)]
struct Ring {
    vertices: Vec<Point>,
    /// Arc length at the start of each edge.
    cum: Vec<f64>,
    edge_len: Vec<f64>,
    normals: Vec<UnitVector>,
    length: f64,
}

impl Ring {
    fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::InvalidDomain("polygon ring needs at least 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v.is_finite() || v.z != 0.0) {
            return Err(GeometryError::InvalidDomain("polygon vertices must be finite planar points".into()));
        }
        let mut cum = Vec::with_capacity(n);
        let mut edge_len = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            let e = vertices[(i + 1) % n] - vertices[i];
            let len = e.norm();
            if len == 0.0 {
                return Err(GeometryError::InvalidDomain(format!("zero-length edge at vertex {i}")));
            }
            cum.push(acc);
            edge_len.push(len);
            normals.push(UnitVector::new_unchecked(e.perp() / len));
            acc += len;
        }
        Ok(Ring { vertices, cum, edge_len, normals, length: acc })
    }

    fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n).map(|i| self.vertices[i].cross2(self.vertices[(i + 1) % n])).sum::<f64>()
    }

    fn edge(&self, i: usize) -> (Point, Point) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    /// Even-odd crossing parity of a horizontal ray from `p`.
    fn crossing_parity(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Polygonal planar domain, possibly with holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    rings: Vec<Ring>,
}

fn segment_distance(p: Point, a: Point, b: Point) -> (f64, f64) {
    let e = b - a;
    let s = ((p - a).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
    ((a + e * s).distance(p), s)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross2(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection, collinear overlaps included.
pub(crate) fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

impl Polygon {
    pub fn new(components: Vec<Vec<Point>>) -> Result<Self> {
        if components.is_empty() {
            return Err(GeometryError::InvalidDomain("polygon has no boundary components".into()));
        }
        let rings = components.into_iter().map(Ring::new).collect::<Result<Vec<_>>>()?;
        if rings[0].signed_area() <= 0.0 {
            return Err(GeometryError::InvalidDomain("outer ring must be counterclockwise".into()));
        }
        for (i, r) in rings.iter().enumerate().skip(1) {
            if r.signed_area() >= 0.0 {
                return Err(GeometryError::InvalidDomain(format!("hole {i} must be clockwise")));
            }
        }
        let poly = Polygon { rings };
        poly.check_simple()?;
        for (i, hole) in poly.rings.iter().enumerate().skip(1) {
            let v = hole.vertices[0];
            if !poly.rings[0].crossing_parity(v) {
                return Err(GeometryError::InvalidDomain(format!("hole {i} is not inside the outer ring")));
            }
            if poly.rings.iter().enumerate().skip(1).any(|(j, other)| j != i && other.crossing_parity(v)) {
                return Err(GeometryError::InvalidDomain(format!("hole {i} is nested in another hole")));
            }
        }
        Ok(poly)
    }

    /// Rejects intersections between non-adjacent edges (across all rings).
    fn check_simple(&self) -> Result<()> {
        let mut edges = Vec::new();
        for (ri, ring) in self.rings.iter().enumerate() {
            let n = ring.vertices.len();
            for i in 0..n {
                let (a, b) = ring.edge(i);
                edges.push((ri, i, n, a, b));
            }
        }
        for (gi, &(ri, i, n, a, b)) in edges.iter().enumerate() {
            for (gj, &(rj, j, _, c, d)) in edges.iter().enumerate().skip(gi + 1) {
                if ri == rj && (j == i + 1 || (i == 0 && j == n - 1)) {
                    // adjacent edges share exactly one vertex; only a fold-back overlap is invalid
                    let (p, q, r) = if j == i + 1 { (a, b, d) } else { (c, a, b) };
                    if orient(p, q, r) == 0.0 && (q - p).dot(r - q) < 0.0 {
                        return Err(GeometryError::SelfIntersection(gi, gj));
                    }
                    continue;
                }
                if segments_intersect(a, b, c, d) {
                    return Err(GeometryError::SelfIntersection(gi, gj));
                }
            }
        }
        Ok(())
    }

    pub fn components(&self) -> impl Iterator<Item = &[Point]> {
        self.rings.iter().map(|r| r.vertices.as_slice())
    }

    /// Number of edges of each boundary component.
    pub fn edge_counts(&self) -> Vec<usize> {
        self.rings.iter().map(|r| r.vertices.len()).collect()
    }

    /// Lengths of the edges of component `c`, in order.
    pub fn edge_lengths(&self, c: usize) -> &[f64] {
        &self.rings[c].edge_len
    }

    fn boundary_point(&self, ring: usize, edge: usize, local: f64, eps_corner: f64) -> BoundaryPoint {
        let r = &self.rings[ring];
        let len = r.edge_len[edge];
        let local = local.clamp(0.0, len);
        let (a, b) = r.edge(edge);
        BoundaryPoint {
            position: a + (b - a) * (local / len),
            normal: r.normals[edge],
            component: ring,
            patch_coord: r.cum[edge] + local,
            is_regular: local > eps_corner && len - local > eps_corner,
        }
    }

    pub(crate) fn point_at_arc(&self, ring: usize, s: f64, eps_corner: f64) -> BoundaryPoint {
        let r = &self.rings[ring];
        let s = s.rem_euclid(r.length);
        let edge = r.cum.partition_point(|&c| c <= s).saturating_sub(1);
        self.boundary_point(ring, edge, s - r.cum[edge], eps_corner)
    }
}

impl Shape for Polygon {
    fn dim(&self) -> usize {
        2
    }

    fn diameter(&self) -> f64 {
        let v = &self.rings[0].vertices;
        let mut d: f64 = 0.0;
        for (i, a) in v.iter().enumerate() {
            for b in &v[i + 1..] {
                d = d.max(a.distance(*b));
            }
        }
        d
    }

    fn volume(&self) -> f64 {
        self.rings.iter().map(Ring::signed_area).sum()
    }

    fn component_measures(&self) -> Vec<f64> {
        self.rings.iter().map(|r| r.length).collect()
    }

    fn bounding_box(&self) -> (Point, Point) {
        let v = &self.rings[0].vertices;
        let lo = v.iter().fold(Vector::new2(f64::INFINITY, f64::INFINITY), |m, p| Vector::new2(m.x.min(p.x), m.y.min(p.y)));
        let hi = v.iter().fold(Vector::new2(f64::NEG_INFINITY, f64::NEG_INFINITY), |m, p| Vector::new2(m.x.max(p.x), m.y.max(p.y)));
        (lo, hi)
    }

    fn contains(&self, p: Point, eps: f64) -> bool {
        let parity = self.rings.iter().fold(false, |acc, r| acc ^ r.crossing_parity(p));
        parity && self.rings.iter().all(|r| r.edges().all(|(a, b)| segment_distance(p, a, b).0 > eps))
    }

    fn ray_cast(&self, x: Point, u: Vector, eps: f64, eps_corner: f64) -> Option<BoundaryPoint> {
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for (ri, ring) in self.rings.iter().enumerate() {
            for i in 0..ring.vertices.len() {
                // a ray leaving the interior can only exit through an edge it meets from the inside
                if u.dot(ring.normals[i].vec()) >= 0.0 {
                    continue;
                }
                let (a, b) = ring.edge(i);
                let e = b - a;
                let denom = u.cross2(e);
                if denom == 0.0 {
                    continue;
                }
                let w = a - x;
                let t = w.cross2(e) / denom;
                let s = w.cross2(u) / denom;
                let slack = eps / ring.edge_len[i];
                if t > eps && s >= -slack && s <= 1.0 + slack && best.is_none_or(|(bt, ..)| t < bt) {
                    best = Some((t, ri, i, s));
                }
            }
        }
        let (_, ri, i, s) = best?;
        Some(self.boundary_point(ri, i, s * self.rings[ri].edge_len[i], eps_corner))
    }

    fn locate(&self, p: Point, eps_corner: f64) -> (BoundaryPoint, f64) {
        let mut best = (f64::INFINITY, 0, 0, 0.0);
        for (ri, ring) in self.rings.iter().enumerate() {
            for (i, (a, b)) in ring.edges().enumerate() {
                let (d, s) = segment_distance(p, a, b);
                if d < best.0 {
                    best = (d, ri, i, s);
                }
            }
        }
        let (d, ri, i, s) = best;
        (self.boundary_point(ri, i, s * self.rings[ri].edge_len[i], eps_corner), d)
    }

    fn sample_boundary<R: Rng + ?Sized>(&self, component: usize, rng: &mut R, eps_corner: f64) -> BoundaryPoint {
        let s = rng.gen::<f64>() * self.rings[component].length;
        self.point_at_arc(component, s, eps_corner)
    }

    fn segment_crossings(&self, p: Point, q: Point, _eps: f64) -> Vec<f64> {
        let d = q - p;
        let mut out = Vec::new();
        for ring in &self.rings {
            for (a, b) in ring.edges() {
                let e = b - a;
                let denom = d.cross2(e);
                if denom == 0.0 {
                    continue;
                }
                let w = a - p;
                let s = w.cross2(e) / denom;
                let r = w.cross2(d) / denom;
                if s > 0.0 && s < 1.0 && (0.0..=1.0).contains(&r) {
                    out.push(s);
                }
            }
        }
        out
    }

    fn is_convex(&self) -> bool {
        if self.rings.len() != 1 {
            return false;
        }
        let v = &self.rings[0].vertices;
        let n = v.len();
        (0..n).all(|i| orient(v[i], v[(i + 1) % n], v[(i + 2) % n]) >= 0.0)
    }
}
