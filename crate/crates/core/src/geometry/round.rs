//! Disks, spheres, ellipses and annuli.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::{BoundaryPoint, GeometryError, Result, Shape};
use crate::quadrature::{adaptive_gauss, gauss_legendre};
use crate::vector::{Point, UnitVector, Vector};

/// Roots of `A t² + B t + C = 0` in ascending order, computed without
/// cancellation. `None` when there is no real root.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return Some((0.0, 0.0));
    }
    let (r1, r2) = (q / a, c / q);
    Some(if r1 <= r2 { (r1, r2) } else { (r2, r1) })
}

/// Parameters of the line `x + t d` meeting the sphere `|y - c| = r`.
fn sphere_roots(x: Point, d: Vector, c: Point, r: f64) -> Option<(f64, f64)> {
    let w = x - c;
    quadratic_roots(d.norm_sq(), 2.0 * d.dot(w), w.norm_sq() - r * r)
}

fn unit_interval_roots(roots: Option<(f64, f64)>, out: &mut Vec<f64>) {
    if let Some((lo, hi)) = roots {
        for s in [lo, hi] {
            if s > 0.0 && s < 1.0 {
                out.push(s);
            }
        }
    }
}

fn positive_angle(v: Vector) -> f64 {
    v.y.atan2(v.x).rem_euclid(TAU)
}

/// Disk (`dim = 2`) or solid sphere (`dim = 3`).
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
    dim: usize,
}

impl Ball {
    pub(crate) fn new(center: Point, radius: f64, dim: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(GeometryError::InvalidDomain(format!("radius must be positive and finite, got {radius}")));
        }
        if dim == 2 && center.z != 0.0 {
            return Err(GeometryError::InvalidDomain("disk center must be planar".into()));
        }
        Ok(Ball { center, radius, dim })
    }

    fn point_on_surface(&self, direction: Vector) -> BoundaryPoint {
        let radial = UnitVector::new(direction).unwrap_or(UnitVector::E1);
        let position = self.center + radial.vec() * self.radius;
        let patch_coord = if self.dim == 2 {
            positive_angle(radial.vec()) * self.radius
        } else {
            // Archimedes: the height coordinate is uniformly distributed on the sphere
            (TAU * self.radius * (position.z - self.center.z + self.radius)).clamp(0.0, 4.0 * PI * self.radius * self.radius)
        };
        BoundaryPoint { position, normal: -radial, component: 0, patch_coord, is_regular: true }
    }

    pub(crate) fn point_at_arc(&self, s: f64) -> BoundaryPoint {
        self.point_on_surface(UnitVector::from_angle(s / self.radius).vec())
    }
}

impl Shape for Ball {
    fn dim(&self) -> usize {
        self.dim
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    fn volume(&self) -> f64 {
        match self.dim {
            2 => PI * self.radius * self.radius,
            _ => 4.0 / 3.0 * PI * self.radius.powi(3),
        }
    }

    fn component_measures(&self) -> Vec<f64> {
        vec![match self.dim {
            2 => TAU * self.radius,
            _ => 4.0 * PI * self.radius * self.radius,
        }]
    }

    fn bounding_box(&self) -> (Point, Point) {
        let r = self.radius;
        let half = if self.dim == 2 { Vector::new2(r, r) } else { Vector::new(r, r, r) };
        (self.center - half, self.center + half)
    }

    fn contains(&self, p: Point, eps: f64) -> bool {
        p.distance(self.center) < self.radius - eps
    }

    fn ray_cast(&self, x: Point, u: Vector, eps: f64, _eps_corner: f64) -> Option<BoundaryPoint> {
        let (_, t) = sphere_roots(x, u, self.center, self.radius)?;
        if t <= eps {
            return None;
        }
        Some(self.point_on_surface(x + u * t - self.center))
    }

    fn locate(&self, p: Point, _eps_corner: f64) -> (BoundaryPoint, f64) {
        let d = p.distance(self.center);
        (self.point_on_surface(p - self.center), (d - self.radius).abs())
    }

    fn sample_boundary<R: Rng + ?Sized>(&self, _component: usize, rng: &mut R, _eps_corner: f64) -> BoundaryPoint {
        let phi = TAU * rng.gen::<f64>();
        if self.dim == 2 {
            return self.point_at_arc(phi * self.radius);
        }
        let z = 2.0 * rng.gen::<f64>() - 1.0;
        let rho = (1.0 - z * z).max(0.0).sqrt();
        self.point_on_surface(Vector::new(rho * phi.cos(), rho * phi.sin(), z))
    }

    fn segment_crossings(&self, p: Point, q: Point, _eps: f64) -> Vec<f64> {
        let mut out = Vec::new();
        unit_interval_roots(sphere_roots(p, q - p, self.center, self.radius), &mut out);
        out
    }

    fn is_convex(&self) -> bool {
        true
    }
}

/// Number of θ-intervals in the cumulative arc-length table.
const ARC_TABLE_SIZE: usize = 1024;

/// Axis-aligned ellipse `((x - cx)/a)² + ((y - cy)/b)² < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipse {
    pub center: Point,
    pub semi_x: f64,
    pub semi_y: f64,
    perimeter: f64,
    /// Arc length from θ = 0 to θ = k·2π/N.
    arc_table: Vec<f64>,
}

impl Ellipse {
    pub(crate) fn new(center: Point, semi_x: f64, semi_y: f64) -> Result<Self> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(semi_x) || !ok(semi_y) || !center.is_finite() || center.z != 0.0 {
            return Err(GeometryError::InvalidDomain(format!("invalid ellipse semi-axes ({semi_x}, {semi_y})")));
        }
        let mut e = Ellipse { center, semi_x, semi_y, perimeter: 0.0, arc_table: Vec::new() };
        e.perimeter = adaptive_gauss(0.0, TAU, 1e-13, |t| e.speed(t));
        let h = TAU / ARC_TABLE_SIZE as f64;
        let mut acc = 0.0;
        e.arc_table.push(0.0);
        for k in 0..ARC_TABLE_SIZE {
            acc += gauss_legendre(k as f64 * h, (k + 1) as f64 * h, |t| e.speed(t));
            e.arc_table.push(acc);
        }
        Ok(e)
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    /// `|P'(θ)|` for `P(θ) = c + (a cos θ, b sin θ)`.
    fn speed(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        (self.semi_x * self.semi_x * s * s + self.semi_y * self.semi_y * c * c).sqrt()
    }

    fn at(&self, t: f64) -> Point {
        self.center + Vector::new2(self.semi_x * t.cos(), self.semi_y * t.sin())
    }

    /// Arc length from θ = 0 to `t ∈ [0, 2π]`.
    pub fn arc_length(&self, t: f64) -> f64 {
        let h = TAU / ARC_TABLE_SIZE as f64;
        let k = ((t / h) as usize).min(ARC_TABLE_SIZE - 1);
        self.arc_table[k] + gauss_legendre(k as f64 * h, t, |s| self.speed(s))
    }

    /// Inverse of [`Ellipse::arc_length`].
    pub fn angle_at_arc(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.perimeter);
        let h = TAU / ARC_TABLE_SIZE as f64;
        let k = self.arc_table.partition_point(|&c| c <= s).clamp(1, ARC_TABLE_SIZE) - 1;
        let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
        let mut t = lo + (s - self.arc_table[k]) / self.speed(lo);
        for _ in 0..8 {
            t = t.clamp(lo, hi);
            let f = self.arc_table[k] + gauss_legendre(lo, t, |x| self.speed(x)) - s;
            let step = f / self.speed(t);
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        t.clamp(lo, hi)
    }

    fn point_at_angle(&self, t: f64) -> BoundaryPoint {
        let t = t.rem_euclid(TAU);
        let position = self.at(t);
        let rel = position - self.center;
        let grad = Vector::new2(rel.x / (self.semi_x * self.semi_x), rel.y / (self.semi_y * self.semi_y));
        BoundaryPoint {
            position,
            normal: -UnitVector::new(grad).unwrap_or(UnitVector::E1),
            component: 0,
            patch_coord: self.arc_length(t).min(self.perimeter),
            is_regular: true,
        }
    }

    pub(crate) fn point_at_arc(&self, s: f64) -> BoundaryPoint {
        self.point_at_angle(self.angle_at_arc(s))
    }

    /// Coordinates scaled so the ellipse becomes the unit circle.
    fn normalized(&self, v: Vector) -> Vector {
        Vector::new2(v.x / self.semi_x, v.y / self.semi_y)
    }

    fn roots(&self, x: Point, d: Vector) -> Option<(f64, f64)> {
        let w = self.normalized(x - self.center);
        let dn = self.normalized(d);
        quadratic_roots(dn.norm_sq(), 2.0 * w.dot(dn), w.norm_sq() - 1.0)
    }
}

impl Shape for Ellipse {
    fn dim(&self) -> usize {
        2
    }

    fn diameter(&self) -> f64 {
        2.0 * self.semi_x.max(self.semi_y)
    }

    fn volume(&self) -> f64 {
        PI * self.semi_x * self.semi_y
    }

    fn component_measures(&self) -> Vec<f64> {
        vec![self.perimeter]
    }

    fn bounding_box(&self) -> (Point, Point) {
        let half = Vector::new2(self.semi_x, self.semi_y);
        (self.center - half, self.center + half)
    }

    fn contains(&self, p: Point, eps: f64) -> bool {
        let rho = self.normalized(p - self.center).norm();
        (1.0 - rho) * self.semi_x.min(self.semi_y) > eps
    }

    fn ray_cast(&self, x: Point, u: Vector, eps: f64, _eps_corner: f64) -> Option<BoundaryPoint> {
        let (_, t) = self.roots(x, u)?;
        if t <= eps {
            return None;
        }
        let q = self.normalized(x + u * t - self.center);
        Some(self.point_at_angle(positive_angle(q)))
    }

    fn locate(&self, p: Point, _eps_corner: f64) -> (BoundaryPoint, f64) {
        // Newton on (P(θ) - p)·P'(θ) = 0 from the radial projection
        let rel = p - self.center;
        let mut t = positive_angle(self.normalized(rel));
        let (a, b) = (self.semi_x, self.semi_y);
        for _ in 0..20 {
            let (s, c) = t.sin_cos();
            let diff = Vector::new2(a * c - rel.x, b * s - rel.y);
            let d1 = Vector::new2(-a * s, b * c);
            let d2 = Vector::new2(-a * c, -b * s);
            let f = diff.dot(d1);
            let fp = d1.norm_sq() + diff.dot(d2);
            if fp <= 0.0 {
                break;
            }
            let step = f / fp;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let bp = self.point_at_angle(t);
        let d = bp.position.distance(p);
        (bp, d)
    }

    fn sample_boundary<R: Rng + ?Sized>(&self, _component: usize, rng: &mut R, _eps_corner: f64) -> BoundaryPoint {
        self.point_at_arc(rng.gen::<f64>() * self.perimeter)
    }

    fn segment_crossings(&self, p: Point, q: Point, _eps: f64) -> Vec<f64> {
        let mut out = Vec::new();
        unit_interval_roots(self.roots(p, q - p), &mut out);
        out
    }

    fn is_convex(&self) -> bool {
        true
    }
}

/// Planar ring `r_in < |x - c| < r_out`. Component 0 is the outer circle,
/// component 1 the inner one.
#[derive(Debug, Clone, PartialEq)]
pub struct Annulus {
    pub center: Point,
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    pub(crate) fn new(center: Point, inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer && outer.is_finite()) || !center.is_finite() || center.z != 0.0 {
            return Err(GeometryError::InvalidDomain(format!("annulus needs 0 < inner < outer, got ({inner}, {outer})")));
        }
        Ok(Annulus { center, inner, outer })
    }

    fn on_circle(&self, component: usize, direction: Vector) -> BoundaryPoint {
        let radial = UnitVector::new(direction).unwrap_or(UnitVector::E1);
        let (r, normal) = if component == 0 { (self.outer, -radial) } else { (self.inner, radial) };
        BoundaryPoint {
            position: self.center + radial.vec() * r,
            normal,
            component,
            patch_coord: positive_angle(radial.vec()) * r,
            is_regular: true,
        }
    }

    pub(crate) fn point_at_arc(&self, component: usize, s: f64) -> BoundaryPoint {
        let r = if component == 0 { self.outer } else { self.inner };
        self.on_circle(component, UnitVector::from_angle(s / r).vec())
    }
}

impl Shape for Annulus {
    fn dim(&self) -> usize {
        2
    }

    fn diameter(&self) -> f64 {
        2.0 * self.outer
    }

    fn volume(&self) -> f64 {
        PI * (self.outer * self.outer - self.inner * self.inner)
    }

    fn component_measures(&self) -> Vec<f64> {
        vec![TAU * self.outer, TAU * self.inner]
    }

    fn bounding_box(&self) -> (Point, Point) {
        let half = Vector::new2(self.outer, self.outer);
        (self.center - half, self.center + half)
    }

    fn contains(&self, p: Point, eps: f64) -> bool {
        let d = p.distance(self.center);
        d > self.inner + eps && d < self.outer - eps
    }

    fn ray_cast(&self, x: Point, u: Vector, eps: f64, _eps_corner: f64) -> Option<BoundaryPoint> {
        let (_, t_out) = sphere_roots(x, u, self.center, self.outer)?;
        if let Some((t_in, _)) = sphere_roots(x, u, self.center, self.inner) {
            if t_in > eps && t_in < t_out {
                return Some(self.on_circle(1, x + u * t_in - self.center));
            }
        }
        if t_out <= eps {
            return None;
        }
        Some(self.on_circle(0, x + u * t_out - self.center))
    }

    fn locate(&self, p: Point, _eps_corner: f64) -> (BoundaryPoint, f64) {
        let d = p.distance(self.center);
        let (d_out, d_in) = ((d - self.outer).abs(), (d - self.inner).abs());
        if d_out <= d_in {
            (self.on_circle(0, p - self.center), d_out)
        } else {
            (self.on_circle(1, p - self.center), d_in)
        }
    }

    fn sample_boundary<R: Rng + ?Sized>(&self, component: usize, rng: &mut R, _eps_corner: f64) -> BoundaryPoint {
        self.on_circle(component, UnitVector::from_angle(TAU * rng.gen::<f64>()).vec())
    }

    fn segment_crossings(&self, p: Point, q: Point, _eps: f64) -> Vec<f64> {
        let mut out = Vec::new();
        unit_interval_roots(sphere_roots(p, q - p, self.center, self.outer), &mut out);
        unit_interval_roots(sphere_roots(p, q - p, self.center, self.inner), &mut out);
        out
    }

    fn is_convex(&self) -> bool {
        false
    }
}
