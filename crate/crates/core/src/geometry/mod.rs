//! Bounded Lipschitz domains with exact boundary queries.
//!
//! A [`Domain`] owns one of the supported shapes and a geometric tolerance
//! `eps_geom` (default `1e-9 × diameter`). All queries are pure; the only
//! randomness enters through the explicit `rng` arguments of the samplers.

mod polygon;
mod polyhedron;
mod round;
mod spec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::vector::{Point, UnitVector, Vector};

pub use polygon::Polygon;
pub use polyhedron::ConvexPolyhedron;
pub use round::{Annulus, Ball, Ellipse};
pub use spec::{DomainSpec, ShapeSpec, BUILTIN_DOMAINS};

/// Relative tolerance used for the default `eps_geom`.
pub const EPS_GEOM_REL: f64 = 1e-9;
/// Hits closer than `EPS_CORNER_REL × diameter` to a vertex or edge are
/// flagged non-regular.
pub const EPS_CORNER_REL: f64 = 1e-7;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("ray from {origin:?} along {direction:?} never reached the boundary")]
    NoHit { origin: Point, direction: Vector },
    #[error("direction points out of the domain (cosine with inward normal {cosine})")]
    DegenerateDirection { cosine: f64 },
    #[error("point {point:?} is not on the boundary (distance {distance:e})")]
    NotOnBoundary { point: Point, distance: f64 },
    #[error("boundary point {0:?} is not regular (vertex or edge)")]
    NonRegularPoint(Point),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("boundary segments {0} and {1} intersect")]
    SelfIntersection(usize, usize),
    #[error("{0} is not supported for this shape")]
    Unsupported(&'static str),
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

/// A point of `∂D` together with its local boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub position: Point,
    /// Inward unit normal. At non-regular points this is the normal of one
    /// adjacent facet and carries no geometric meaning.
    pub normal: UnitVector,
    pub component: usize,
    /// Measure-preserving coordinate within the component, in
    /// `[0, |component|)`: arc length in 2D, an area coordinate in 3D.
    pub patch_coord: f64,
    pub is_regular: bool,
}

/// First boundary point met by a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitResult {
    pub point: BoundaryPoint,
    pub distance: f64,
}

/// Per-shape boundary queries. Tolerances are passed in by [`Domain`].
pub(crate) trait Shape {
    fn dim(&self) -> usize;
    fn diameter(&self) -> f64;
    fn volume(&self) -> f64;
    fn component_measures(&self) -> Vec<f64>;
    fn bounding_box(&self) -> (Point, Point);
    fn contains(&self, p: Point, eps: f64) -> bool;
    /// First intersection with `t > eps`.
    fn ray_cast(&self, x: Point, u: Vector, eps: f64, eps_corner: f64) -> Option<BoundaryPoint>;
    /// Boundary point nearest `p` with its distance.
    fn locate(&self, p: Point, eps_corner: f64) -> (BoundaryPoint, f64);
    fn sample_boundary<R: Rng + ?Sized>(&self, component: usize, rng: &mut R, eps_corner: f64) -> BoundaryPoint
    where
        Self: Sized;
    /// Parameters `s ∈ (0, 1)` where the segment `p + s (q - p)` meets `∂D`.
    fn segment_crossings(&self, p: Point, q: Point, eps: f64) -> Vec<f64>;
    fn is_convex(&self) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeKind {
    Polygon(Polygon),
    Disk(Ball),
    Ellipse(Ellipse),
    Annulus(Annulus),
    Sphere(Ball),
    Polyhedron(ConvexPolyhedron),
}

macro_rules! dispatch {
    ($kind:expr, $s:ident => $body:expr) => {
        match $kind {
            ShapeKind::Polygon($s) => $body,
            ShapeKind::Disk($s) => $body,
            ShapeKind::Ellipse($s) => $body,
            ShapeKind::Annulus($s) => $body,
            ShapeKind::Sphere($s) => $body,
            ShapeKind::Polyhedron($s) => $body,
        }
    };
}

/// A bounded domain `D ⊂ ℝ^d`, `d ∈ {2, 3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: ShapeKind,
    eps_geom: f64,
    eps_corner: f64,
    diameter: f64,
    volume: f64,
    component_measures: Vec<f64>,
    component_offsets: Vec<f64>,
    boundary_measure: f64,
}

impl Domain {
    fn from_kind(kind: ShapeKind) -> Self {
        let diameter = dispatch!(&kind, s => s.diameter());
        let volume = dispatch!(&kind, s => s.volume());
        let component_measures = dispatch!(&kind, s => s.component_measures());
        let mut component_offsets = Vec::with_capacity(component_measures.len());
        let mut acc = 0.0;
        for m in &component_measures {
            component_offsets.push(acc);
            acc += m;
        }
        Domain {
            kind,
            eps_geom: EPS_GEOM_REL * diameter,
            eps_corner: EPS_CORNER_REL * diameter,
            diameter,
            volume,
            component_measures,
            component_offsets,
            boundary_measure: acc,
        }
    }

    /// Polygon with an outer ring (counterclockwise) followed by holes
    /// (clockwise).
    pub fn polygon(components: Vec<Vec<Point>>) -> Result<Self> {
        Ok(Self::from_kind(ShapeKind::Polygon(Polygon::new(components)?)))
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        Ok(Self::from_kind(ShapeKind::Disk(Ball::new(center, radius, 2)?)))
    }

    pub fn ellipse(center: Point, semi_x: f64, semi_y: f64) -> Result<Self> {
        Ok(Self::from_kind(ShapeKind::Ellipse(Ellipse::new(center, semi_x, semi_y)?)))
    }

    pub fn annulus(center: Point, inner: f64, outer: f64) -> Result<Self> {
        Ok(Self::from_kind(ShapeKind::Annulus(Annulus::new(center, inner, outer)?)))
    }

    pub fn sphere(center: Point, radius: f64) -> Result<Self> {
        Ok(Self::from_kind(ShapeKind::Sphere(Ball::new(center, radius, 3)?)))
    }

    /// Convex polyhedron from its planar convex faces (any consistent
    /// vertex order; inward normals are derived from the centroid).
    pub fn convex_polyhedron(faces: Vec<Vec<Point>>) -> Result<Self> {
        Ok(Self::from_kind(ShapeKind::Polyhedron(ConvexPolyhedron::new(faces)?)))
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::polygon(vec![vec![
            Vector::new2(x0, y0),
            Vector::new2(x1, y0),
            Vector::new2(x1, y1),
            Vector::new2(x0, y1),
        ]])
    }

    /// Overrides the geometric tolerance.
    pub fn with_eps_geom(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite() && eps < 1e-3 * self.diameter) {
            return Err(GeometryError::InvalidDomain(format!("eps_geom {eps} out of range")));
        }
        self.eps_geom = eps;
        Ok(self)
    }

    pub fn kind(&self) -> &ShapeKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        dispatch!(&self.kind, s => s.dim())
    }

    pub fn eps_geom(&self) -> f64 {
        self.eps_geom
    }

    pub fn eps_corner(&self) -> f64 {
        self.eps_corner
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `(|D|, |∂D|)`.
    pub fn measures(&self) -> (f64, f64) {
        (self.volume, self.boundary_measure)
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn boundary_measure(&self) -> f64 {
        self.boundary_measure
    }

    pub fn component_measures(&self) -> &[f64] {
        &self.component_measures
    }

    pub fn is_convex(&self) -> bool {
        dispatch!(&self.kind, s => s.is_convex())
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        dispatch!(&self.kind, s => s.bounding_box())
    }

    /// Strict interior membership; points within `eps_geom` of `∂D` are
    /// outside.
    pub fn contains(&self, x: Point) -> bool {
        dispatch!(&self.kind, s => s.contains(x, self.eps_geom))
    }

    /// First boundary point seen from `x` in direction `u`. `x` should be an
    /// interior point; use [`Domain::ray_cast_from`] to start on `∂D`.
    pub fn ray_cast(&self, x: Point, u: UnitVector) -> Result<HitResult> {
        let hit = dispatch!(&self.kind, s => s.ray_cast(x, u.vec(), self.eps_geom, self.eps_corner))
            .ok_or(GeometryError::NoHit { origin: x, direction: u.vec() })?;
        Ok(HitResult { distance: hit.position.distance(x), point: hit })
    }

    /// Ray cast from a boundary point; `u` must point strictly inward.
    pub fn ray_cast_from(&self, x: &BoundaryPoint, u: UnitVector) -> Result<HitResult> {
        let cosine = u.dot(x.normal.vec());
        if cosine <= 0.0 {
            return Err(GeometryError::DegenerateDirection { cosine });
        }
        self.ray_cast(x.position, u)
    }

    /// Boundary data at a point of `∂D` (within `10 × eps_geom`).
    pub fn locate(&self, p: Point) -> Result<BoundaryPoint> {
        let (bp, dist) = dispatch!(&self.kind, s => s.locate(p, self.eps_corner));
        if dist > 10.0 * self.eps_geom {
            return Err(GeometryError::NotOnBoundary { point: p, distance: dist });
        }
        Ok(bp)
    }

    /// Distance from `p` to the nearest boundary point.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        dispatch!(&self.kind, s => s.locate(p, self.eps_corner)).1
    }

    /// Inward unit normal at a regular boundary point.
    pub fn inward_normal(&self, p: Point) -> Result<UnitVector> {
        let bp = self.locate(p)?;
        if !bp.is_regular {
            return Err(GeometryError::NonRegularPoint(p));
        }
        Ok(bp.normal)
    }

    /// `x ↔ y`: the open segment between the two boundary points lies in the
    /// open interior.
    pub fn visible(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> bool {
        self.segment_in_interior(x.position, y.position)
    }

    /// True iff the open segment `(a, b)` lies in the interior of `D`.
    pub fn segment_in_interior(&self, a: Point, b: Point) -> bool {
        let d = b - a;
        let len = d.norm();
        if len <= 10.0 * self.eps_geom {
            return false;
        }
        let mid = a + d * 0.5;
        if !self.contains(mid) {
            return false;
        }
        let u = UnitVector::new_unchecked(d / len);
        let reach = 0.5 * len - 10.0 * self.eps_geom;
        [u, -u].iter().all(|&dir| match self.ray_cast(mid, dir) {
            Ok(hit) => hit.distance >= reach,
            Err(_) => false,
        })
    }

    /// Boundary point distributed according to the normalized surface measure.
    pub fn sample_boundary_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> BoundaryPoint {
        let component = self.pick_component(rng.gen::<f64>() * self.boundary_measure);
        dispatch!(&self.kind, s => s.sample_boundary(component, rng, self.eps_corner))
    }

    /// Measure-preserving coordinate of `p` in `[0, |∂D|)`, concatenating the
    /// components in order. Equal-length intervals of this coordinate are
    /// equal-measure subsets of `∂D`.
    pub fn boundary_coordinate(&self, p: &BoundaryPoint) -> f64 {
        self.component_offsets[p.component] + p.patch_coord
    }

    /// Index in `0..bins` of the equal-measure boundary cell containing `p`.
    pub fn boundary_bin(&self, p: &BoundaryPoint, bins: usize) -> usize {
        let f = self.boundary_coordinate(p) / self.boundary_measure;
        ((f * bins as f64) as usize).min(bins - 1)
    }

    /// Boundary point at arc length `s` along component `component` (2D).
    pub fn point_at_arc(&self, component: usize, s: f64) -> Result<BoundaryPoint> {
        if component >= self.component_measures.len() {
            return Err(GeometryError::InvalidDomain(format!("no boundary component {component}")));
        }
        match &self.kind {
            ShapeKind::Polygon(p) => Ok(p.point_at_arc(component, s, self.eps_corner)),
            ShapeKind::Disk(b) => Ok(b.point_at_arc(s)),
            ShapeKind::Ellipse(e) => Ok(e.point_at_arc(s)),
            ShapeKind::Annulus(a) => Ok(a.point_at_arc(component, s)),
            ShapeKind::Sphere(_) | ShapeKind::Polyhedron(_) => Err(GeometryError::Unsupported("arc-length parametrization")),
        }
    }

    /// Parameters `s ∈ (0, 1)`, sorted, at which the segment `a + s (b - a)`
    /// meets `∂D`.
    pub fn segment_crossings(&self, a: Point, b: Point) -> Vec<f64> {
        let mut s = dispatch!(&self.kind, sh => sh.segment_crossings(a, b, self.eps_geom));
        s.sort_by(f64::total_cmp);
        s
    }

    /// Uniform interior point by rejection from the bounding box.
    pub fn sample_interior_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let (lo, hi) = self.bounding_box();
        loop {
            let p = Vector::new(
                lo.x + (hi.x - lo.x) * rng.gen::<f64>(),
                lo.y + (hi.y - lo.y) * rng.gen::<f64>(),
                if self.dim() == 3 { lo.z + (hi.z - lo.z) * rng.gen::<f64>() } else { 0.0 },
            );
            if self.contains(p) {
                return p;
            }
        }
    }

    fn pick_component(&self, target: f64) -> usize {
        let mut acc = 0.0;
        for (i, m) in self.component_measures.iter().enumerate() {
            acc += m;
            if target < acc {
                return i;
            }
        }
        self.component_measures.len() - 1
    }
}

/// Uniform direction on `𝕊^{d-1}`.
pub fn sample_sphere_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitVector {
    let phi = std::f64::consts::TAU * rng.gen::<f64>();
    if dim == 2 {
        return UnitVector::from_angle(phi);
    }
    let z = 2.0 * rng.gen::<f64>() - 1.0;
    let r = (1.0 - z * z).max(0.0).sqrt();
    UnitVector::new_unchecked(Vector::new(r * phi.cos(), r * phi.sin(), z))
}

#[cfg(test)]
mod tests;
