//! Reflection laws on the inward half-sphere and the frames that orient them.
//!
//! Directions are drawn in a local frame whose first axis `e` is the
//! reference direction, then rotated so that `e` lands on the inward normal.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::geometry::BoundaryPoint;
use crate::quadrature::adaptive_gauss;
use crate::vector::{Point, UnitVector, Vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReflectionError {
    #[error("angle {0} is outside [0, pi/2)")]
    OutOfRange(f64),
    #[error("dimension {0} is not supported (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("invalid reflection law: {0}")]
    InvalidLaw(String),
    #[error("no frame at non-regular boundary point {0:?}")]
    NonRegularPoint(Point),
}

pub type Result<T> = std::result::Result<T, ReflectionError>;

const QUANTILE_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawConstants {
    pub gamma_d: f64,
    pub kappa_d: f64,
}

/// Surface measure of the unit sphere in R^d.
pub fn sphere_measure(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Cosine-law normalization and the mean-chord constant.
pub fn constants(d: usize) -> Result<LawConstants> {
    if !(2..=3).contains(&d) {
        return Err(ReflectionError::UnsupportedDimension(d));
    }
    let df = d as f64;
    let kappa_d = PI.sqrt() * gamma((df + 1.0) / 2.0) * df / gamma(df / 2.0 + 1.0);
    Ok(LawConstants { gamma_d: kappa_d / sphere_measure(d), kappa_d })
}

/// Rotation taking the reference axis `e = (1, 0, ..)` to the inward normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub origin: BoundaryPoint,
    dim: usize,
    /// Columns of the rotation matrix; the first is the normal.
    columns: [Vector; 3],
}

impl Frame {
    pub fn new(origin: BoundaryPoint, dim: usize) -> Result<Frame> {
        if !origin.is_regular {
            return Err(ReflectionError::NonRegularPoint(origin.position));
        }
        let n = origin.normal.vec();
        let columns = match dim {
            2 => [n, n.perp(), Vector::new(0.0, 0.0, 1.0)],
            3 => {
                let helper = if n.y.abs() < 0.9 { Vector::new(0.0, 1.0, 0.0) } else { Vector::new(0.0, 0.0, 1.0) };
                let t = helper - n * helper.dot(n);
                let t1 = t / t.norm();
                [n, t1, n.cross(t1)]
            }
            d => return Err(ReflectionError::UnsupportedDimension(d)),
        };
        Ok(Frame { origin, dim, columns })
    }

    pub fn normal(&self) -> UnitVector {
        self.origin.normal
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major d×d matrix.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.columns[j].component(i)).collect()).collect()
    }

    pub fn to_world(&self, local: Vector) -> Vector {
        self.columns[0] * local.x + self.columns[1] * local.y + self.columns[2] * local.z
    }

    pub fn to_local(&self, v: Vector) -> Vector {
        Vector::new(self.columns[0].dot(v), self.columns[1].dot(v), if self.dim == 3 { self.columns[2].dot(v) } else { 0.0 })
    }

    /// max |UᵀU − I|.
    pub fn orthogonality_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((self.columns[i].dot(self.columns[j]) - target).abs());
            }
        }
        err
    }

    pub fn determinant(&self) -> f64 {
        match self.dim {
            2 => self.columns[0].cross2(self.columns[1]),
            _ => self.columns[0].dot(self.columns[1].cross(self.columns[2])),
        }
    }
}

pub fn build_frame(p: &BoundaryPoint, dim: usize) -> Result<Frame> {
    Frame::new(*p, dim)
}

/// Piecewise-linear angular density with a tabulated inverse CDF.
///
/// The sampled variable is `a = |phi|` in 2D and the polar angle in 3D, with
/// marginal density `2 g(a)` and `2 pi g(a) sin a` respectively.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomAngular {
    dim: usize,
    phis: Vec<f64>,
    values: Vec<f64>,
    /// Marginal CDF at each knot.
    knot_cdf: Vec<f64>,
    quantiles: Vec<f64>,
    slopes: Vec<f64>,
}

impl CustomAngular {
    fn new(dim: usize, knots: &[(f64, f64)]) -> Result<Self> {
        let bad = |m: &str| Err(ReflectionError::InvalidLaw(m.to_string()));
        if knots.len() < 2 {
            return bad("custom pdf needs at least two knots");
        }
        if knots.iter().any(|(p, v)| !p.is_finite() || !v.is_finite()) {
            return bad("custom pdf knots must be finite");
        }
        if knots[0].0 != 0.0 {
            return bad("first custom pdf knot must be at angle 0");
        }
        let last = knots[knots.len() - 1].0;
        if (last - FRAC_PI_2).abs() > 1e-9 {
            return bad("last custom pdf knot must be at angle pi/2");
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return bad("custom pdf angles must be strictly increasing");
        }
        // positive on every compact subset of the open half-sphere
        if knots[..knots.len() - 1].iter().any(|&(_, v)| v <= 0.0) || knots[knots.len() - 1].1 < 0.0 {
            return bad("custom pdf must be positive on [0, pi/2)");
        }
        let mut phis: Vec<f64> = knots.iter().map(|k| k.0).collect();
        *phis.last_mut().unwrap() = FRAC_PI_2;
        let values: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let mut law = CustomAngular { dim, phis, values, knot_cdf: vec![], quantiles: vec![], slopes: vec![] };
        let total = law.raw_integral(law.phis.len() - 1, FRAC_PI_2);
        for v in &mut law.values {
            *v /= total;
        }
        law.knot_cdf = (0..law.phis.len()).map(|k| law.raw_integral(k.saturating_sub(1), law.phis[k])).collect();
        law.build_table();
        Ok(law)
    }

    fn interval(&self, a: f64) -> usize {
        self.phis.partition_point(|&p| p <= a).clamp(1, self.phis.len() - 1) - 1
    }

    fn g(&self, a: f64) -> f64 {
        let k = self.interval(a);
        let s = (self.values[k + 1] - self.values[k]) / (self.phis[k + 1] - self.phis[k]);
        self.values[k] + s * (a - self.phis[k])
    }

    fn marginal_pdf(&self, a: f64) -> f64 {
        match self.dim {
            2 => 2.0 * self.g(a),
            _ => TAU * self.g(a) * a.sin(),
        }
    }

    /// Marginal mass of [0, a] where `a` lies in knot interval `k`,
    /// using whatever the current `values` are.
    fn raw_integral(&self, k: usize, a: f64) -> f64 {
        let mut sum = 0.0;
        for j in 0..=k.min(self.phis.len() - 2) {
            let lo = self.phis[j];
            let hi = if j == k { a } else { self.phis[j + 1] };
            sum += self.piece(j, lo, hi);
        }
        sum
    }

    fn piece(&self, j: usize, lo: f64, hi: f64) -> f64 {
        let s = (self.values[j + 1] - self.values[j]) / (self.phis[j + 1] - self.phis[j]);
        match self.dim {
            2 => {
                let (dl, dh) = (lo - self.phis[j], hi - self.phis[j]);
                2.0 * (self.values[j] * (dh - dl) + 0.5 * s * (dh * dh - dl * dl))
            }
            _ => {
                let c = self.values[j] - s * self.phis[j];
                let f = |t: f64| -c * t.cos() + s * (t.sin() - t * t.cos());
                TAU * (f(hi) - f(lo))
            }
        }
    }

    fn cdf(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        if a >= FRAC_PI_2 {
            return 1.0;
        }
        let k = self.interval(a);
        (self.knot_cdf[k] + self.piece(k, self.phis[k], a)).clamp(0.0, 1.0)
    }

    fn invert_by_bisection(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, FRAC_PI_2);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Tabulates the quantile function and its Fritsch–Carlson slopes.
    fn build_table(&mut self) {
        let n = QUANTILE_POINTS;
        let h = 1.0 / n as f64;
        self.quantiles = (0..=n).map(|i| self.invert_by_bisection(i as f64 * h)).collect();
        let q = &self.quantiles;
        let delta: Vec<f64> = q.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut m = vec![0.0; n + 1];
        m[0] = delta[0];
        m[n] = delta[n - 1];
        for i in 1..n {
            m[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
        }
        for i in 0..n {
            if delta[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let (a, b) = (m[i] / delta[i], m[i + 1] / delta[i]);
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                m[i] = t * a * delta[i];
                m[i + 1] = t * b * delta[i];
            }
        }
        self.slopes = m;
    }

    fn table_quantile(&self, u: f64) -> (f64, f64, f64) {
        let n = QUANTILE_POINTS;
        let h = 1.0 / n as f64;
        let i = ((u * n as f64) as usize).min(n - 1);
        let t = (u - i as f64 * h) / h;
        let (q0, q1) = (self.quantiles[i], self.quantiles[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let guess = (2.0 * t3 - 3.0 * t2 + 1.0) * q0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * q1 + (t3 - t2) * m1;
        (guess.clamp(q0, q1), q0, q1)
    }

    /// Inverse marginal CDF: interpolated table value refined by safeguarded Newton.
    pub fn quantile(&self, u: f64) -> f64 {
        let (mut a, mut lo, mut hi) = self.table_quantile(u);
        for _ in 0..30 {
            let f = self.cdf(a) - u;
            if f.abs() < 1e-15 {
                break;
            }
            if f > 0.0 {
                hi = a;
            } else {
                lo = a;
            }
            let p = self.marginal_pdf(a);
            let mut next = a - f / p;
            if !(p > 0.0) || !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - a).abs() < 1e-14 {
                a = next;
                break;
            }
            a = next;
        }
        a
    }

    pub fn knots(&self) -> Vec<(f64, f64)> {
        self.phis.iter().copied().zip(self.values.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawKind {
    Cosine,
    UniformHemisphere,
    Custom(Box<CustomAngular>),
}

/// Angular density on the half-sphere around `e`, azimuthally symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionLaw {
    dim: usize,
    kind: LawKind,
}

impl ReflectionLaw {
    pub fn cosine(dim: usize) -> Result<Self> {
        constants(dim)?;
        Ok(ReflectionLaw { dim, kind: LawKind::Cosine })
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        constants(dim)?;
        Ok(ReflectionLaw { dim, kind: LawKind::UniformHemisphere })
    }

    /// Piecewise-linear density in the polar angle through `(phi, value)`
    /// knots spanning [0, pi/2]. Values are rescaled to integrate to one.
    pub fn custom(dim: usize, knots: &[(f64, f64)]) -> Result<Self> {
        constants(dim)?;
        let law = ReflectionLaw { dim, kind: LawKind::Custom(Box::new(CustomAngular::new(dim, knots)?)) };
        let total = law.total_mass();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ReflectionError::InvalidLaw(format!("density integrates to {total}, not 1")));
        }
        Ok(law)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            LawKind::Cosine => "cosine",
            LawKind::UniformHemisphere => "uniform",
            LawKind::Custom(_) => "custom",
        }
    }

    pub fn is_cosine(&self) -> bool {
        matches!(self.kind, LawKind::Cosine)
    }

    fn pdf_unchecked(&self, phi: f64) -> f64 {
        match &self.kind {
            LawKind::Cosine => constants(self.dim).unwrap().gamma_d * phi.cos(),
            LawKind::UniformHemisphere => 2.0 / sphere_measure(self.dim),
            LawKind::Custom(c) => c.g(phi),
        }
    }

    /// Density with respect to the surface measure of the sphere, as a
    /// function of the angle to `e`.
    pub fn pdf(&self, phi: f64) -> Result<f64> {
        if !(0.0..FRAC_PI_2).contains(&phi) {
            return Err(ReflectionError::OutOfRange(phi));
        }
        Ok(self.pdf_unchecked(phi))
    }

    /// Density of direction `v` leaving a wall with inward normal `n`;
    /// zero outside the inward half-sphere.
    pub fn density(&self, n: UnitVector, v: UnitVector) -> f64 {
        let c = n.dot(v.vec());
        if c <= 0.0 {
            return 0.0;
        }
        self.pdf_unchecked(c.min(1.0).acos())
    }

    /// Integral of the density over the half-sphere by adaptive quadrature.
    pub fn total_mass(&self) -> f64 {
        let breaks: Vec<f64> = match &self.kind {
            LawKind::Custom(c) => c.phis.clone(),
            _ => vec![0.0, FRAC_PI_2],
        };
        let f = |a: f64| match self.dim {
            2 => 2.0 * self.pdf_unchecked(a),
            _ => TAU * self.pdf_unchecked(a) * a.sin(),
        };
        breaks.windows(2).map(|w| adaptive_gauss(w[0], w[1], 1e-14, f)).sum()
    }

    /// CDF of the signed angle on (−π/2, π/2) in 2D, of the polar angle on
    /// [0, π/2) in 3D.
    pub fn angular_cdf(&self, a: f64) -> f64 {
        let a = a.clamp(-FRAC_PI_2, FRAC_PI_2);
        match (&self.kind, self.dim) {
            (LawKind::Cosine, 2) => 0.5 * (1.0 + a.sin()),
            (LawKind::Cosine, _) => a.max(0.0).sin().powi(2),
            (LawKind::UniformHemisphere, 2) => (a + FRAC_PI_2) / PI,
            (LawKind::UniformHemisphere, _) => 1.0 - a.max(0.0).cos(),
            (LawKind::Custom(c), 2) => 0.5 + 0.5 * a.signum() * c.cdf(a.abs()),
            (LawKind::Custom(c), _) => c.cdf(a),
        }
    }

    /// Direction in the local frame, `e` being the first axis.
    pub fn sample_local<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match self.dim {
            2 => {
                let phi = match &self.kind {
                    LawKind::Cosine => (2.0 * rng.gen::<f64>() - 1.0).asin(),
                    LawKind::UniformHemisphere => PI * rng.gen::<f64>() - FRAC_PI_2,
                    LawKind::Custom(c) => {
                        let a = c.quantile(rng.gen());
                        if rng.gen::<bool>() { a } else { -a }
                    }
                };
                Vector::new2(phi.cos(), phi.sin())
            }
            _ => {
                let (cos_t, sin_t) = match &self.kind {
                    LawKind::Cosine => {
                        let u: f64 = rng.gen();
                        ((1.0 - u).sqrt(), u.sqrt())
                    }
                    LawKind::UniformHemisphere => {
                        let c = 1.0 - rng.gen::<f64>();
                        (c, (1.0 - c * c).max(0.0).sqrt())
                    }
                    LawKind::Custom(c) => {
                        let t = c.quantile(rng.gen());
                        (t.cos(), t.sin())
                    }
                };
                let az = TAU * rng.gen::<f64>();
                Vector::new(cos_t, sin_t * az.cos(), sin_t * az.sin())
            }
        }
    }

    /// A direction pointing strictly into the domain, distributed by the law
    /// rotated onto the frame's normal.
    pub fn sample_direction<R: Rng + ?Sized>(&self, frame: &Frame, rng: &mut R) -> UnitVector {
        loop {
            let w = frame.to_world(self.sample_local(rng));
            if let Some(v) = UnitVector::new(w) {
                if v.dot(frame.normal().vec()) > 0.0 {
                    return v;
                }
            }
        }
    }
}

/// Law specification as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub law: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_pdf: Option<Vec<(f64, f64)>>,
}

impl Default for LawSpec {
    fn default() -> Self {
        LawSpec { law: "cosine".into(), custom_pdf: None }
    }
}

impl LawSpec {
    pub fn build(&self, dim: usize) -> Result<ReflectionLaw> {
        match (self.law.as_str(), &self.custom_pdf) {
            ("cosine", None) => ReflectionLaw::cosine(dim),
            ("uniform", None) => ReflectionLaw::uniform(dim),
            ("custom", Some(knots)) => ReflectionLaw::custom(dim, knots),
            ("custom", None) => Err(ReflectionError::InvalidLaw("law 'custom' requires custom_pdf".into())),
            ("cosine" | "uniform", Some(_)) => Err(ReflectionError::InvalidLaw("custom_pdf is only valid with law 'custom'".into())),
            (other, _) => Err(ReflectionError::InvalidLaw(format!("unknown law '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::stats::{ks_test, Accumulator};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bp(normal: Vector) -> BoundaryPoint {
        BoundaryPoint {
            position: Vector::ZERO,
            normal: UnitVector::new(normal).unwrap(),
            component: 0,
            patch_coord: 0.0,
            is_regular: true,
        }
    }

    fn signed_angle(n: Vector, v: Vector) -> f64 {
        n.cross2(v).atan2(n.dot(v))
    }

    #[test]
    fn constants_in_two_and_three_dimensions() {
        let c2 = constants(2).unwrap();
        assert!((c2.kappa_d - PI).abs() < 1e-13);
        assert!((c2.gamma_d - 0.5).abs() < 1e-13);
        let c3 = constants(3).unwrap();
        assert!((c3.kappa_d - 4.0).abs() < 1e-13);
        assert!((c3.gamma_d - 1.0 / PI).abs() < 1e-13);
        for d in [2, 3] {
            let c = constants(d).unwrap();
            assert!((c.kappa_d - c.gamma_d * sphere_measure(d)).abs() < 1e-13);
        }
        assert_eq!(constants(4), Err(ReflectionError::UnsupportedDimension(4)));
    }

    #[test]
    fn gamma_is_the_reciprocal_of_the_cosine_integral() {
        let i2 = adaptive_gauss(-FRAC_PI_2, FRAC_PI_2, 1e-14, f64::cos);
        assert!((constants(2).unwrap().gamma_d - 1.0 / i2).abs() < 1e-13);
        let i3 = adaptive_gauss(0.0, FRAC_PI_2, 1e-14, |t| TAU * t.cos() * t.sin());
        assert!((constants(3).unwrap().gamma_d - 1.0 / i3).abs() < 1e-13);
    }

    #[test]
    fn cosine_pdf_values() {
        assert!((ReflectionLaw::cosine(2).unwrap().pdf(0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((ReflectionLaw::cosine(3).unwrap().pdf(0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(ReflectionLaw::cosine(2).unwrap().pdf(FRAC_PI_2 - 1e-9).unwrap() < 1e-9);
        assert!(matches!(ReflectionLaw::cosine(2).unwrap().pdf(FRAC_PI_2), Err(ReflectionError::OutOfRange(_))));
        assert!(ReflectionLaw::cosine(3).unwrap().pdf(-0.1).is_err());
    }

    #[test]
    fn frames_send_e_to_the_normal() {
        let f = build_frame(&bp(Vector::new2(0.0, 1.0)), 2).unwrap();
        // rotation by +pi/2
        assert_eq!(f.matrix(), vec![vec![0.0, -1.0], vec![1.0, 0.0]]);
        let f = build_frame(&bp(Vector::new2(1.0, 0.0)), 2).unwrap();
        assert_eq!(f.matrix(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let f = build_frame(&bp(Vector::new(1.0, 0.0, 0.0)), 3).unwrap();
        assert_eq!(f.matrix(), vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let f = build_frame(&bp(Vector::new(0.0, 0.0, 1.0)), 3).unwrap();
        assert_eq!(f.to_world(Vector::new(1.0, 0.0, 0.0)), Vector::new(0.0, 0.0, 1.0));
        assert!(f.orthogonality_error() < 1e-12);
    }

    #[test]
    fn frame_rejects_corners() {
        let mut p = bp(Vector::new2(0.0, 1.0));
        p.is_regular = false;
        assert!(matches!(build_frame(&p, 2), Err(ReflectionError::NonRegularPoint(_))));
    }

    #[test]
    fn cosine_2d_mean_cosine_is_pi_over_4() {
        let law = ReflectionLaw::cosine(2).unwrap();
        let frame = build_frame(&bp(Vector::new2(0.6, 0.8)), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut acc = Accumulator::default();
        let mut angles = Vec::with_capacity(1_000_000);
        for _ in 0..1_000_000 {
            let v = law.sample_direction(&frame, &mut rng);
            let c = v.dot(frame.normal().vec());
            assert!(c > 0.0);
            acc.push(c);
            angles.push(signed_angle(frame.normal().vec(), v.vec()));
        }
        assert!((acc.mean() - PI / 4.0).abs() < 3.0 * acc.stderr(), "{}", acc.mean());
        assert!(ks_test(&angles, |a| law.angular_cdf(a)).unwrap().pass);
    }

    #[test]
    fn cosine_3d_mean_cosine_is_two_thirds() {
        let law = ReflectionLaw::cosine(3).unwrap();
        let n = Vector::new(1.0, -2.0, 2.0) / 3.0;
        let frame = build_frame(&bp(n), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut acc = Accumulator::default();
        let mut angles = Vec::with_capacity(1_000_000);
        for _ in 0..1_000_000 {
            let v = law.sample_direction(&frame, &mut rng);
            let c = v.dot(n);
            assert!(c > 0.0);
            acc.push(c);
            angles.push(c.min(1.0).acos());
        }
        assert!((acc.mean() - 2.0 / 3.0).abs() < 3.0 * acc.stderr(), "{}", acc.mean());
        assert!(ks_test(&angles, |a| law.angular_cdf(a)).unwrap().pass);
    }

    #[test]
    fn uniform_law_samplers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let law = ReflectionLaw::uniform(2).unwrap();
        let frame = build_frame(&bp(Vector::new2(0.0, -1.0)), 2).unwrap();
        let angles: Vec<f64> = (0..200_000)
            .map(|_| signed_angle(frame.normal().vec(), law.sample_direction(&frame, &mut rng).vec()))
            .collect();
        let mean = angles.iter().sum::<f64>() / angles.len() as f64;
        let sd = PI / 12f64.sqrt() / (angles.len() as f64).sqrt();
        assert!(mean.abs() < 3.0 * sd);
        assert!(ks_test(&angles, |a| law.angular_cdf(a)).unwrap().pass);

        let law = ReflectionLaw::uniform(3).unwrap();
        let frame = build_frame(&bp(Vector::new(0.0, 1.0, 0.0)), 3).unwrap();
        let angles: Vec<f64> = (0..200_000)
            .map(|_| law.sample_direction(&frame, &mut rng).dot(frame.normal().vec()).min(1.0).acos())
            .collect();
        assert!(ks_test(&angles, |a| law.angular_cdf(a)).unwrap().pass);
    }

    #[test]
    fn azimuth_is_uniform_in_3d() {
        let law = ReflectionLaw::cosine(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let az: Vec<f64> = (0..200_000).map(|_| {
            let v = law.sample_local(&mut rng);
            v.z.atan2(v.y)
        }).collect();
        assert!(ks_test(&az, |a| (a + PI) / TAU).unwrap().pass);
    }

    #[test]
    fn constant_custom_law_is_the_uniform_law() {
        for d in [2, 3] {
            let c = ReflectionLaw::custom(d, &[(0.0, 7.0), (FRAC_PI_2, 7.0)]).unwrap();
            let u = ReflectionLaw::uniform(d).unwrap();
            for k in 0..50 {
                let a = FRAC_PI_2 * k as f64 / 50.0;
                assert!((c.pdf(a).unwrap() - u.pdf(a).unwrap()).abs() < 1e-14);
                assert!((c.angular_cdf(a) - u.angular_cdf(a)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn custom_quantiles_are_accurate() {
        let knots = [(0.0, 3.0), (0.4, 1.0), (1.0, 2.5), (FRAC_PI_2, 0.0)];
        for d in [2, 3] {
            let law = ReflectionLaw::custom(d, &knots).unwrap();
            let LawKind::Custom(c) = law.kind() else { unreachable!() };
            for k in 0..=2000 {
                let u = k as f64 / 2000.0;
                let a = c.quantile(u);
                assert!((c.cdf(a) - u).abs() < 1e-8, "d={d} u={u}");
                assert!((0.0..=FRAC_PI_2).contains(&a));
            }
        }
    }

    #[test]
    fn custom_sampler_matches_its_cdf() {
        let knots = [(0.0, 1.0), (0.7, 4.0), (FRAC_PI_2, 0.5)];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [2, 3] {
            let law = ReflectionLaw::custom(d, &knots).unwrap();
            let n = if d == 2 { Vector::new2(-1.0, 0.0) } else { Vector::new(0.0, 0.0, -1.0) };
            let frame = build_frame(&bp(n), d).unwrap();
            let angles: Vec<f64> = (0..200_000)
                .map(|_| {
                    let v = law.sample_direction(&frame, &mut rng).vec();
                    if d == 2 { signed_angle(n, v) } else { v.dot(n).min(1.0).acos() }
                })
                .collect();
            assert!(ks_test(&angles, |a| law.angular_cdf(a)).unwrap().pass, "d={d}");
        }
    }

    #[test]
    fn invalid_custom_laws() {
        assert!(ReflectionLaw::custom(2, &[(0.0, 1.0)]).is_err());
        assert!(ReflectionLaw::custom(2, &[(0.1, 1.0), (FRAC_PI_2, 1.0)]).is_err());
        assert!(ReflectionLaw::custom(2, &[(0.0, 1.0), (1.0, 1.0)]).is_err());
        assert!(ReflectionLaw::custom(2, &[(0.0, 1.0), (0.5, 0.0), (FRAC_PI_2, 1.0)]).is_err());
        assert!(ReflectionLaw::custom(2, &[(0.0, 1.0), (1.0, 1.0), (0.5, 1.0), (FRAC_PI_2, 1.0)]).is_err());
        assert!(ReflectionLaw::custom(4, &[(0.0, 1.0), (FRAC_PI_2, 1.0)]).is_err());
    }

    #[test]
    fn law_spec_parsing() {
        let spec: LawSpec = serde_json::from_str(r#"{"law": "custom", "custom_pdf": [[0, 1], [1.5707963267948966, 0]]}"#).unwrap();
        let law = spec.build(2).unwrap();
        assert_eq!(law.name(), "custom");
        let spec: LawSpec = serde_json::from_str(r#"{"law": "cosine"}"#).unwrap();
        assert!(spec.build(3).unwrap().is_cosine());
        let spec: LawSpec = serde_json::from_str(r#"{"law": "specular"}"#).unwrap();
        assert!(spec.build(2).is_err());
        assert!(serde_json::from_str::<LawSpec>(r#"{"law": "cosine", "extra": 1}"#).is_err());
    }

    #[test]
    fn every_sample_points_inward_on_real_boundaries() {
        let law = ReflectionLaw::cosine(2).unwrap();
        let d = Domain::builtin("ellipse-2x1").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20_000 {
            let p = d.sample_boundary_uniform(&mut rng);
            let f = build_frame(&p, 2).unwrap();
            assert!(law.sample_direction(&f, &mut rng).dot(p.normal.vec()) > 0.0);
        }
    }

    proptest! {
        #[test]
        fn frames_are_rotations(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
            let v = Vector::new(x, y, z);
            prop_assume!(v.norm() > 1e-3);
            let f = build_frame(&bp(v / v.norm()), 3).unwrap();
            prop_assert!(f.orthogonality_error() < 1e-12);
            prop_assert!((f.determinant() - 1.0).abs() < 1e-12);
            prop_assert!(f.to_world(Vector::new(1.0, 0.0, 0.0)).distance(v / v.norm()) < 1e-12);
            let w = Vector::new(0.3, -0.2, 0.9);
            prop_assert!(f.to_local(f.to_world(w)).distance(w) < 1e-12);
            let g = build_frame(&bp(Vector::new2(x, y) / Vector::new2(x, y).norm()), 2);
            if let Ok(g) = g {
                prop_assert!(g.orthogonality_error() < 1e-12);
            }
        }

        #[test]
        fn custom_laws_are_normalized(
            vals in prop::collection::vec(0.01f64..10.0, 2..8),
            tail in 0.0f64..5.0,
            dim in 2usize..4,
        ) {
            let k = vals.len();
            let mut knots: Vec<(f64, f64)> = vals.iter().enumerate().map(|(i, &v)| (FRAC_PI_2 * i as f64 / k as f64, v)).collect();
            knots.push((FRAC_PI_2, tail));
            let law = ReflectionLaw::custom(dim, &knots).unwrap();
            prop_assert!((law.total_mass() - 1.0).abs() < 1e-9);
            prop_assert!((law.angular_cdf(FRAC_PI_2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shipped_laws_are_normalized() {
        for d in [2, 3] {
            assert!((ReflectionLaw::cosine(d).unwrap().total_mass() - 1.0).abs() < 1e-9);
            assert!((ReflectionLaw::uniform(d).unwrap().total_mass() - 1.0).abs() < 1e-9);
        }
    }
}
