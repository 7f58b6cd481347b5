//! Small fixed-size vector types shared by the 2D and 3D code paths.
//!
//! Planar vectors are stored with `z = 0`; every routine that depends on the
//! ambient dimension takes it from the [`Domain`](crate::geometry::Domain).

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or displacement in the plane or in space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Positions are plain vectors; the alias only documents intent.
pub type Point = Vector;

impl Vector {
    pub const ZERO: Vector = Vector { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn new2(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    /// Builds a vector from a 2- or 3-element slice.
    pub fn from_slice(c: &[f64]) -> Option<Self> {
        match c {
            [x, y] => Some(Self::new2(*x, *y)),
            [x, y, z] => Some(Self::new(*x, *y, *z)),
            _ => None,
        }
    }

    pub fn dot(self, o: Vector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vector) -> Vector {
        Vector::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    /// z-component of the planar cross product.
    pub fn cross2(self, o: Vector) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, o: Vector) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Left-hand perpendicular in the plane, `(-y, x)`.
    pub fn perp(self) -> Vector {
        Vector::new2(-self.y, self.x)
    }

    pub fn component(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    /// Lexicographic comparison on (x, y, z).
    pub fn lex_cmp(self, o: Vector) -> std::cmp::Ordering {
        self.x
            .total_cmp(&o.x)
            .then(self.y.total_cmp(&o.y))
            .then(self.z.total_cmp(&o.z))
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, o: Vector) -> Vector {
        Vector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vector {
    fn add_assign(&mut self, o: Vector) {
        *self = *self + o;
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, o: Vector) -> Vector {
        Vector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        Vector::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    fn mul(self, v: Vector) -> Vector {
        v * self
    }
}

impl Div<f64> for Vector {
    type Output = Vector;
    fn div(self, s: f64) -> Vector {
        Vector::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector::new(-self.x, -self.y, -self.z)
    }
}

/// A vector of Euclidean length one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector(Vector);

impl UnitVector {
    pub const E1: UnitVector = UnitVector(Vector::new(1.0, 0.0, 0.0));

    /// Normalizes `v`; `None` for zero or non-finite input.
    pub fn new(v: Vector) -> Option<Self> {
        let n = v.norm();
        if n > 0.0 && n.is_finite() {
            Some(UnitVector(v / n))
        } else {
            None
        }
    }

    /// Wraps a vector the caller guarantees to be normalized.
    pub fn new_unchecked(v: Vector) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9, "not a unit vector: {v:?}");
        UnitVector(v)
    }

    pub fn from_angle(theta: f64) -> Self {
        UnitVector(Vector::new2(theta.cos(), theta.sin()))
    }

    pub fn vec(self) -> Vector {
        self.0
    }

    pub fn dot(self, o: Vector) -> f64 {
        self.0.dot(o)
    }

    /// Polar angle in the plane, in `(-pi, pi]`.
    pub fn angle(self) -> f64 {
        self.0.y.atan2(self.0.x)
    }
}

impl Neg for UnitVector {
    type Output = UnitVector;
    fn neg(self) -> UnitVector {
        UnitVector(-self.0)
    }
}

impl From<UnitVector> for Vector {
    fn from(u: UnitVector) -> Vector {
        u.0
    }
}
