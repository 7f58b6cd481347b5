//! Continuous-time billiard: the walk interpolated at unit speed.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{sample_sphere_direction, BoundaryPoint, Domain, GeometryError, ShapeKind};
use crate::quadrature::gauss_legendre_8;
use crate::reflection::ReflectionLaw;
use crate::stats::{bonferroni, chi_square_independence, chi_square_uniform, BinnedMeasure, StatsError, TestResult, ALPHA};
use crate::vector::{Point, UnitVector, Vector};
use crate::walk::{self, WalkError, WalkRecord, WalkState};

/// |V·n| below this counts as a tangential crossing.
pub const TANGENTIAL_COS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BilliardError {
    #[error("time {t} is outside [0, {total}]")]
    TimeOutOfRange { t: f64, total: f64 },
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("invalid start: {0}")]
    InvalidStart(String),
}

pub type Result<T> = std::result::Result<T, BilliardError>;

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// Fixed interior point and direction.
    Interior { x: Point, v: UnitVector },
    /// Boundary point; the first direction is drawn from the law.
    Boundary(BoundaryPoint),
    /// Position uniform in the domain, direction uniform on the sphere.
    Stationary,
}

/// Piecewise-linear trajectory through the hit points, at unit speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilliardPath {
    dim: usize,
    /// `times[i]` is the time at which the path passes `points[i]`.
    times: Vec<f64>,
    points: Vec<Point>,
    pub resample_count: u64,
}

impl BilliardPath {
    pub fn simulate<R: Rng + ?Sized>(
        domain: &Domain,
        law: &ReflectionLaw,
        start: Start,
        n_flights: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let dim = domain.dim();
        let mut times = Vec::with_capacity(n_flights + 1);
        let mut points = Vec::with_capacity(n_flights + 1);
        let first = match start {
            Start::Interior { x, v } => {
                if !domain.contains(x) {
                    return Err(BilliardError::InvalidStart(format!("{x:?} is not interior")));
                }
                let hit = domain.ray_cast(x, v)?;
                points.push(x);
                times.push(0.0);
                Some((hit.point, hit.distance))
            }
            Start::Stationary => loop {
                let x = domain.sample_interior_uniform(rng);
                let v = sample_sphere_direction(dim, rng);
                let hit = domain.ray_cast(x, v)?;
                if hit.point.is_regular {
                    points.push(x);
                    times.push(0.0);
                    break Some((hit.point, hit.distance));
                }
            },
            Start::Boundary(bp) => {
                points.push(bp.position);
                times.push(0.0);
                let mut w = walk::Walk::new(domain, law, bp);
                let resample_count = Self::extend(&mut w, &mut times, &mut points, n_flights, rng)?;
                return Ok(BilliardPath { dim, times, points, resample_count });
            }
        };
        let Some((bp, dist)) = first else { unreachable!() };
        points.push(bp.position);
        times.push(dist);
        if n_flights <= 1 {
            return Ok(BilliardPath { dim, times, points, resample_count: 0 });
        }
        let mut w = walk::Walk::new(domain, law, bp);
        w.state.local_time = dist;
        let resample_count = Self::extend(&mut w, &mut times, &mut points, n_flights - 1, rng)?;
        Ok(BilliardPath { dim, times, points, resample_count })
    }

    fn extend<R: Rng + ?Sized>(
        w: &mut walk::Walk<'_>,
        times: &mut Vec<f64>,
        points: &mut Vec<Point>,
        n: usize,
        rng: &mut R,
    ) -> Result<u64> {
        for _ in 0..n {
            let s = w.advance(rng)?;
            times.push(s.local_time);
            points.push(s.position.position);
        }
        Ok(w.resample_count)
    }

    /// Path through the states of an unthinned walk record.
    pub fn from_walk(record: &WalkRecord, dim: usize) -> Self {
        assert_eq!(record.thin, 1, "a billiard path needs every walk state");
        BilliardPath {
            dim,
            times: record.states.iter().map(|s: &WalkState| s.local_time).collect(),
            points: record.states.iter().map(|s| s.position.position).collect(),
            resample_count: record.resample_count,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flights(&self) -> usize {
        self.points.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn total_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn flight_length(&self, i: usize) -> f64 {
        self.times[i + 1] - self.times[i]
    }

    pub fn direction(&self, i: usize) -> UnitVector {
        let d = self.points[i + 1] - self.points[i];
        UnitVector::new_unchecked(d / d.norm())
    }

    /// (X_t, V_t), with V right-continuous at the hit times.
    pub fn state_at(&self, t: f64) -> Result<(Point, UnitVector)> {
        let total = self.total_time();
        if !(0.0..=total).contains(&t) {
            return Err(BilliardError::TimeOutOfRange { t, total });
        }
        let i = self.times.partition_point(|&s| s <= t).clamp(1, self.flights()) - 1;
        let v = self.direction(i);
        if t == self.times[i + 1] {
            return Ok((self.points[i + 1], v));
        }
        Ok((self.points[i] + v.vec() * (t - self.times[i]), v))
    }

    /// Time spent in `region` divided by the total time.
    pub fn occupation_fraction(&self, region: &Region) -> f64 {
        self.occupation_time(region) / self.total_time()
    }

    pub fn occupation_time(&self, region: &Region) -> f64 {
        (0..self.flights()).map(|i| region.segment_length(self.points[i], self.points[i + 1])).sum()
    }

    /// Integral of `f(X_s, V_s)` over the whole path, Gauss–Legendre on each flight.
    pub fn path_integral(&self, f: impl Fn(Point, UnitVector) -> f64) -> f64 {
        let rule = gauss_legendre_8();
        let mut total = 0.0;
        for i in 0..self.flights() {
            let (a, v, len) = (self.points[i], self.direction(i), self.flight_length(i));
            let half = 0.5 * len;
            total += half * rule.iter().map(|&(x, w)| w * f(a + v.vec() * (half * (x + 1.0)), v)).sum::<f64>();
        }
        total
    }

    /// The first `flights` flights.
    pub fn head(&self, flights: usize) -> BilliardPath {
        let k = flights.min(self.flights()) + 1;
        BilliardPath { dim: self.dim, times: self.times[..k].to_vec(), points: self.points[..k].to_vec(), resample_count: self.resample_count }
    }

    /// Rows `n, tau, x, y(, z), vx, vy(, vz)`; the last point has no flight.
    pub fn write_flights_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let three = self.dim == 3;
        writeln!(out, "{}", if three { "n,tau,x,y,z,vx,vy,vz" } else { "n,tau,x,y,vx,vy" })?;
        for i in 0..self.flights() {
            let (p, v) = (self.points[i], self.direction(i).vec());
            if three {
                writeln!(out, "{i},{},{},{},{},{},{},{}", self.times[i], p.x, p.y, p.z, v.x, v.y, v.z)?;
            } else {
                writeln!(out, "{i},{},{},{},{},{}", self.times[i], p.x, p.y, v.x, v.y)?;
            }
        }
        Ok(())
    }

    /// States at `burn_in`, `burn_in + spacing`, ... up to the end of the path.
    pub fn sample_times(&self, burn_in: f64, spacing: f64) -> Vec<(Point, UnitVector)> {
        let mut out = Vec::new();
        let mut t = burn_in;
        let mut i = 0;
        while t < self.total_time() {
            while self.times[i + 1] <= t {
                i += 1;
            }
            let v = self.direction(i);
            out.push((self.points[i] + v.vec() * (t - self.times[i]), v));
            t += spacing;
        }
        out
    }
}

/// A ball (disk in 2D) or axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RegionPart {
    Ball { center: Vector, radius: f64 },
    Box { lo: Vector, hi: Vector },
}

impl RegionPart {
    fn contains(&self, p: Point) -> bool {
        match self {
            RegionPart::Ball { center, radius } => p.distance(*center) < *radius,
            RegionPart::Box { lo, hi } => (0..3).all(|k| lo.component(k) <= p.component(k) && p.component(k) <= hi.component(k)),
        }
    }

    /// Parameter interval of `a + s (b − a)`, s in [0, 1], inside the part.
    fn clip(&self, a: Point, b: Point) -> Option<(f64, f64)> {
        let d = b - a;
        let (lo, hi) = match self {
            RegionPart::Ball { center, radius } => {
                let w = a - *center;
                let (qa, qb, qc) = (d.norm_sq(), w.dot(d), w.norm_sq() - radius * radius);
                let disc = qb * qb - qa * qc;
                if qa == 0.0 || disc <= 0.0 {
                    return None;
                }
                let r = disc.sqrt();
                ((-qb - r) / qa, (-qb + r) / qa)
            }
            RegionPart::Box { lo, hi } => {
                let (mut s0, mut s1) = (f64::NEG_INFINITY, f64::INFINITY);
                for k in 0..3 {
                    let (o, dk, l, h) = (a.component(k), d.component(k), lo.component(k), hi.component(k));
                    if dk == 0.0 {
                        if o < l || o > h {
                            return None;
                        }
                    } else {
                        let (t0, t1) = ((l - o) / dk, (h - o) / dk);
                        s0 = s0.max(t0.min(t1));
                        s1 = s1.min(t0.max(t1));
                    }
                }
                (s0, s1)
            }
        };
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        (lo < hi).then_some((lo, hi))
    }

    fn measure(&self, dim: usize) -> f64 {
        match self {
            RegionPart::Ball { radius, .. } if dim == 2 => PI * radius * radius,
            RegionPart::Ball { radius, .. } => 4.0 / 3.0 * PI * radius.powi(3),
            RegionPart::Box { lo, hi } => (0..dim).map(|k| hi.component(k) - lo.component(k)).product(),
        }
    }
}

/// Finite union of balls and boxes; `Whole` stands for the full domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Whole,
    Union(Vec<RegionPart>),
}

impl Region {
    pub fn empty() -> Self {
        Region::Union(Vec::new())
    }

    pub fn ball(center: Vector, radius: f64) -> Self {
        Region::Union(vec![RegionPart::Ball { center, radius }])
    }

    pub fn cuboid(lo: Vector, hi: Vector) -> Self {
        Region::Union(vec![RegionPart::Box { lo, hi }])
    }

    pub fn union(mut self, other: Region) -> Self {
        match (&mut self, other) {
            (Region::Whole, _) | (_, Region::Whole) => Region::Whole,
            (Region::Union(a), Region::Union(b)) => {
                a.extend(b);
                self
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match self {
            Region::Whole => true,
            Region::Union(parts) => parts.iter().any(|r| r.contains(p)),
        }
    }

    /// Merged parameter intervals of the segment inside the region.
    pub fn segment_intervals(&self, a: Point, b: Point) -> Vec<(f64, f64)> {
        let parts = match self {
            Region::Whole => return vec![(0.0, 1.0)],
            Region::Union(parts) => parts,
        };
        let mut iv: Vec<(f64, f64)> = parts.iter().filter_map(|r| r.clip(a, b)).collect();
        iv.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
        for (lo, hi) in iv {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        merged
    }

    pub fn segment_length(&self, a: Point, b: Point) -> f64 {
        let len = a.distance(b);
        self.segment_intervals(a, b).iter().map(|(lo, hi)| (hi - lo) * len).sum()
    }

    /// Sum of the part measures; exact when the parts are disjoint.
    pub fn measure(&self, domain: &Domain) -> f64 {
        match self {
            Region::Whole => domain.volume(),
            Region::Union(parts) => parts.iter().map(|r| r.measure(domain.dim())).sum(),
        }
    }
}

/// Segments (2D) or triangles (3D) inside the domain, each with a fixed unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalSurface {
    dim: usize,
    facets: Vec<Vec<Point>>,
    normals: Vec<UnitVector>,
}

impl InternalSurface {
    pub fn polyline(points: &[Point]) -> Result<Self> {
        if points.len() < 2 {
            return Err(BilliardError::InvalidSurface("a polyline needs two points".into()));
        }
        let mut facets = Vec::new();
        let mut normals = Vec::new();
        for w in points.windows(2) {
            let e = w[1] - w[0];
            let n = UnitVector::new(e.perp()).ok_or_else(|| BilliardError::InvalidSurface("zero-length segment".into()))?;
            facets.push(w.to_vec());
            normals.push(n);
        }
        Ok(InternalSurface { dim: 2, facets, normals })
    }

    pub fn segment(a: Point, b: Point) -> Result<Self> {
        Self::polyline(&[a, b])
    }

    pub fn triangles(tris: &[[Point; 3]]) -> Result<Self> {
        let mut normals = Vec::new();
        for t in tris {
            let n = UnitVector::new((t[1] - t[0]).cross(t[2] - t[0]))
                .ok_or_else(|| BilliardError::InvalidSurface("degenerate triangle".into()))?;
            normals.push(n);
        }
        Ok(InternalSurface { dim: 3, facets: tris.iter().map(|t| t.to_vec()).collect(), normals })
    }

    /// Checks that every facet lies in the closed domain.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if domain.dim() != self.dim {
            return Err(BilliardError::InvalidSurface("dimension does not match the domain".into()));
        }
        let tol = 10.0 * domain.eps_geom();
        let inside = |p: Point| domain.contains(p) || domain.distance_to_boundary(p) <= tol;
        for f in &self.facets {
            // vertices plus interior samples catch facets that leave a non-convex domain
            for k in 0..=64 {
                let s = k as f64 / 64.0;
                let p = if f.len() == 2 {
                    f[0] + (f[1] - f[0]) * s
                } else {
                    let c = (f[0] + f[1] + f[2]) / 3.0;
                    c + (f[k % 3] - c) * s
                };
                if !inside(p) {
                    return Err(BilliardError::InvalidSurface(format!("facet point {p:?} lies outside the domain")));
                }
            }
        }
        Ok(())
    }

    pub fn facets(&self) -> usize {
        self.facets.len()
    }

    /// Parameter along `a + s u`, s in (0, len), where the segment meets facet `f`.
    fn intersect(&self, f: usize, a: Point, u: Vector, len: f64) -> Option<f64> {
        let n = self.normals[f].vec();
        let p = &self.facets[f];
        let s = (p[0] - a).dot(n) / u.dot(n);
        if !(s > 0.0 && s < len) {
            return None;
        }
        let x = a + u * s;
        let inside = if self.dim == 2 {
            let e = p[1] - p[0];
            let r = (x - p[0]).dot(e) / e.norm_sq();
            (0.0..=1.0).contains(&r)
        } else {
            (0..3).all(|k| (p[(k + 1) % 3] - p[k]).cross(x - p[k]).dot(n) >= 0.0)
        };
        inside.then_some(s)
    }

    fn touches(&self, f: usize, a: Point, b: Point, eps: f64) -> bool {
        let p = &self.facets[f];
        let n = self.normals[f].vec();
        let (da, db) = ((a - p[0]).dot(n), (b - p[0]).dot(n));
        if da.abs() > eps && db.abs() > eps {
            return false;
        }
        if self.dim == 2 {
            let e = p[1] - p[0];
            let (ra, rb) = ((a - p[0]).dot(e) / e.norm_sq(), (b - p[0]).dot(e) / e.norm_sq());
            ra.max(rb) >= 0.0 && ra.min(rb) <= 1.0
        } else {
            true
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub time: f64,
    pub point: Point,
    pub facet: usize,
    /// Direction in the frame of the crossed side, first axis along the
    /// normal the particle moves toward; always has nonnegative first component.
    pub relative_direction: Vector,
}

impl CrossingEvent {
    /// Signed angle from the normal in 2D, polar angle in 3D.
    pub fn angle(&self) -> f64 {
        let w = self.relative_direction;
        if w.z == 0.0 {
            w.y.atan2(w.x)
        } else {
            w.x.clamp(-1.0, 1.0).acos()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub events: Vec<CrossingEvent>,
    pub tangential_count: u64,
}

impl CrossingReport {
    pub fn write_csv<W: std::io::Write>(&self, dim: usize, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", if dim == 3 { "time,x,y,z,angle" } else { "time,x,y,angle" })?;
        for e in &self.events {
            if dim == 3 {
                writeln!(out, "{},{},{},{},{}", e.time, e.point.x, e.point.y, e.point.z, e.angle())?;
            } else {
                writeln!(out, "{},{},{},{}", e.time, e.point.x, e.point.y, e.angle())?;
            }
        }
        Ok(())
    }
}

fn relative_direction(dim: usize, n: Vector, v: Vector) -> Vector {
    let side = if v.dot(n) >= 0.0 { n } else { -n };
    if dim == 2 {
        Vector::new2(v.dot(side), v.dot(side.perp()))
    } else {
        let helper = if side.y.abs() < 0.9 { Vector::new(0.0, 1.0, 0.0) } else { Vector::new(0.0, 0.0, 1.0) };
        let t = helper - side * helper.dot(side);
        let t1 = t / t.norm();
        Vector::new(v.dot(side), v.dot(t1), v.dot(side.cross(t1)))
    }
}

/// All transversal crossings of `surface`, sorted by time.
pub fn detect_crossings(path: &BilliardPath, surface: &InternalSurface, eps: f64) -> CrossingReport {
    let mut report = CrossingReport::default();
    for i in 0..path.flights() {
        let (a, b) = (path.points[i], path.points[i + 1]);
        let u = path.direction(i).vec();
        let len = path.flight_length(i);
        for f in 0..surface.facets() {
            let n = surface.normals[f].vec();
            if u.dot(n).abs() < TANGENTIAL_COS {
                if surface.touches(f, a, b, eps) {
                    report.tangential_count += 1;
                }
                continue;
            }
            if let Some(s) = surface.intersect(f, a, u, len) {
                report.events.push(CrossingEvent {
                    time: path.times[i] + s,
                    point: a + u * s,
                    facet: f,
                    relative_direction: relative_direction(path.dim, n, u),
                });
            }
        }
    }
    report.events.sort_by(|x, y| x.time.total_cmp(&y.time));
    report
}

/// Equal-measure cells of the unit sphere: arcs in 2D, z-bands times
/// four azimuth sectors in 3D.
pub fn direction_bin(v: UnitVector, dim: usize, bins: usize) -> usize {
    let v = v.vec();
    if dim == 2 {
        let a = v.y.atan2(v.x).rem_euclid(TAU);
        ((a / TAU * bins as f64) as usize).min(bins - 1)
    } else {
        let bands = bins / 4;
        let z = (((v.z + 1.0) / 2.0 * bands as f64) as usize).min(bands - 1);
        let a = v.y.atan2(v.x).rem_euclid(TAU);
        z * 4 + ((a / TAU * 4.0) as usize).min(3)
    }
}

/// Cell of `-v` given the cell of `v` under [`direction_bin`].
pub fn antipodal_bin(bin: usize, dim: usize, bins: usize) -> usize {
    if dim == 2 {
        (bin + bins / 2) % bins
    } else {
        let bands = bins / 4;
        (bands - 1 - bin / 4) * 4 + (bin % 4 + 2) % 4
    }
}

/// Time-weighted direction histogram over flights `from..`.
pub fn velocity_histogram(path: &BilliardPath, bins: usize, from: usize) -> BinnedMeasure {
    let mut m = BinnedMeasure::zeros(bins);
    for i in from..path.flights() {
        m.add(direction_bin(path.direction(i), path.dim, bins), path.flight_length(i));
    }
    m
}

/// Equal-area position cells for the shapes used in stationarity checks.
#[derive(Debug, Clone, PartialEq)]
pub enum PositionBinning {
    /// Two rings split at r² = R²/2, each cut into `sectors` equal angles.
    Disk { center: Point, radius: f64, sectors: usize },
    Grid { lo: Point, hi: Point, nx: usize, ny: usize },
}

impl PositionBinning {
    /// 8 cells for the disk (2 rings × 4 sectors) and rectangles (4 × 2 grid).
    pub fn for_domain(domain: &Domain) -> Option<Self> {
        match domain.kind() {
            ShapeKind::Disk(b) => Some(PositionBinning::Disk { center: b.center, radius: b.radius, sectors: 4 }),
            ShapeKind::Polygon(_) => {
                let (lo, hi) = domain.bounding_box();
                let box_area = (hi.x - lo.x) * (hi.y - lo.y);
                ((domain.volume() - box_area).abs() < 1e-12 * box_area)
                    .then_some(PositionBinning::Grid { lo, hi, nx: 4, ny: 2 })
            }
            _ => None,
        }
    }

    pub fn bins(&self) -> usize {
        match self {
            PositionBinning::Disk { sectors, .. } => 2 * sectors,
            PositionBinning::Grid { nx, ny, .. } => nx * ny,
        }
    }

    pub fn bin(&self, p: Point) -> usize {
        match *self {
            PositionBinning::Disk { center, radius, sectors } => {
                let q = p - center;
                let ring = usize::from(q.norm_sq() >= 0.5 * radius * radius);
                let a = q.y.atan2(q.x).rem_euclid(TAU);
                ring * sectors + ((a / TAU * sectors as f64) as usize).min(sectors - 1)
            }
            PositionBinning::Grid { lo, hi, nx, ny } => {
                let ix = (((p.x - lo.x) / (hi.x - lo.x) * nx as f64) as usize).min(nx - 1);
                let iy = (((p.y - lo.y) / (hi.y - lo.y) * ny as f64) as usize).min(ny - 1);
                iy * nx + ix
            }
        }
    }
}

/// Independence plus both marginal uniformity tests on a position × direction table,
/// Bonferroni-corrected to overall level `ALPHA`.
pub fn product_uniformity(samples: &[(Point, UnitVector)], positions: &PositionBinning, dim: usize, dir_bins: usize) -> Result<Vec<TestResult>> {
    let mut table = vec![vec![0.0; dir_bins]; positions.bins()];
    for (p, v) in samples {
        table[positions.bin(*p)][direction_bin(*v, dim, dir_bins)] += 1.0;
    }
    let pos = BinnedMeasure { weights: table.iter().map(|r| r.iter().sum()).collect() };
    let dir = BinnedMeasure { weights: (0..dir_bins).map(|j| table.iter().map(|r| r[j]).sum()).collect() };
    let alpha = bonferroni(ALPHA, 3);
    Ok(vec![
        chi_square_independence(&table)?.named("position-direction-independence").at_level(alpha),
        chi_square_uniform(&pos)?.named("position-uniformity").at_level(alpha),
        chi_square_uniform(&dir)?.named("direction-uniformity").at_level(alpha),
    ])
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::walk::random_start;

    fn v2(x: f64, y: f64) -> Vector {
        Vector::new2(x, y)
    }

    fn disk_path(seed: u64, n: usize) -> (Domain, BilliardPath) {
        let d = Domain::builtin("unit-disk").unwrap();
        let law = ReflectionLaw::cosine(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = BilliardPath::simulate(&d, &law, Start::Stationary, n, &mut rng).unwrap();
        (d, p)
    }

    #[test]
    fn state_at_examples() {
        let d = Domain::builtin("unit-disk").unwrap();
        let law = ReflectionLaw::cosine(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = BilliardPath::simulate(&d, &law, Start::Interior { x: Vector::ZERO, v: UnitVector::E1 }, 10, &mut rng).unwrap();
        let (x, v) = p.state_at(0.5).unwrap();
        assert_eq!(x, v2(0.5, 0.0));
        assert_eq!(v, UnitVector::E1);
        for n in 0..=p.flights() {
            assert_eq!(p.state_at(p.times()[n]).unwrap().0, p.points()[n]);
        }
        let mid = 0.5 * (p.times()[3] + p.times()[4]);
        let expect = (p.points()[3] + p.points()[4]) / 2.0;
        assert!(p.state_at(mid).unwrap().0.distance(expect) < 1e-14);
        assert!(matches!(p.state_at(-0.1), Err(BilliardError::TimeOutOfRange { .. })));
        assert!(p.state_at(p.total_time() + 1e-9).is_err());
    }

    #[test]
    fn speed_one_and_continuity() {
        let (_, p) = disk_path(1, 500);
        for i in 0..p.flights() {
            let gap = p.points()[i].distance(p.points()[i + 1]);
            assert!((gap - p.flight_length(i)).abs() < 1e-12);
            assert!((p.direction(i).vec().norm() - 1.0).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let t = rng.gen::<f64>() * (p.total_time() - 0.1);
            let dt = rng.gen::<f64>() * 0.1;
            let (a, _) = p.state_at(t).unwrap();
            let (b, _) = p.state_at(t + dt).unwrap();
            assert!(a.distance(b) <= dt + 1e-12);
        }
    }

    #[test]
    fn occupation_examples() {
        let (d, p) = disk_path(2, 200_000);
        assert_eq!(p.occupation_fraction(&Region::Whole), 1.0);
        assert_eq!(p.occupation_fraction(&Region::empty()), 0.0);
        let f = p.occupation_fraction(&Region::ball(Vector::ZERO, 0.5));
        // flights are correlated only through their endpoints; 1% is many standard errors
        assert!((f - 0.25).abs() < 0.01, "{f}");
        assert!((Region::ball(Vector::ZERO, 0.5).measure(&d) - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn region_clipping() {
        let r = Region::cuboid(v2(0.0, 0.0), v2(1.0, 1.0)).union(Region::ball(v2(1.0, 0.5), 0.5));
        let len = r.segment_length(v2(-1.0, 0.5), v2(3.0, 0.5));
        assert!((len - 1.5).abs() < 1e-15);
        assert_eq!(r.segment_intervals(v2(-1.0, 0.5), v2(3.0, 0.5)).len(), 1);
        assert_eq!(r.segment_length(v2(-1.0, 2.0), v2(3.0, 2.0)), 0.0);
        let inside = Region::ball(Vector::ZERO, 1.0).segment_length(v2(-0.2, 0.0), v2(0.3, 0.0));
        assert!((inside - 0.5).abs() < 1e-15);
        assert!(r.contains(v2(1.4, 0.5)) && !r.contains(v2(1.6, 0.9)));
    }

    #[test]
    fn path_integral_consistency() {
        let (_, p) = disk_path(3, 2000);
        assert!((p.path_integral(|_, _| 1.0) - p.total_time()).abs() < 1e-9);
        let a = Region::ball(v2(0.2, -0.1), 0.4);
        // the indicator is discontinuous, so compare on a smooth surrogate instead
        let via_quadrature = p.path_integral(|x, _| x.x * x.x);
        let exact: f64 = (0..p.flights())
            .map(|i| {
                let (s, e) = (p.points()[i], p.points()[i + 1]);
                p.flight_length(i) * (s.x * s.x + s.x * e.x + e.x * e.x) / 3.0
            })
            .sum();
        assert!((via_quadrature - exact).abs() < 1e-9 * exact);
        assert!(p.occupation_time(&a) <= p.total_time());
    }

    #[test]
    fn telescoping_identity() {
        let (_, p) = disk_path(4, 1000);
        type Grad = fn(Point) -> Vector;
        let cases: [(fn(Point) -> f64, Grad); 3] = [
            (|x| x.x * x.y, |x| v2(x.y, x.x)),
            (|x| x.x.powi(3) - 2.0 * x.y * x.y, |x| v2(3.0 * x.x * x.x, -4.0 * x.y)),
            (|x| x.x * x.x * x.y + x.y.powi(4), |x| v2(2.0 * x.x * x.y, x.x * x.x + 4.0 * x.y.powi(3))),
        ];
        for (g, grad) in cases {
            let integral = p.path_integral(|x, v| -v.vec().dot(grad(x)));
            let end = p.state_at(p.total_time()).unwrap().0;
            assert!((integral - (g(p.points()[0]) - g(end))).abs() < 1e-8);
        }
    }

    #[test]
    fn crossing_examples() {
        let d = Domain::builtin("unit-disk").unwrap();
        let law = ReflectionLaw::cosine(2).unwrap();
        let s = InternalSurface::segment(v2(0.0, -1.0), v2(0.0, 1.0)).unwrap();
        s.validate(&d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let start = Start::Interior { x: v2(-0.5, 0.0), v: UnitVector::E1 };
        let p = BilliardPath::simulate(&d, &law, start, 1, &mut rng).unwrap();
        let r = detect_crossings(&p, &s, d.eps_geom());
        assert_eq!(r.events.len(), 1);
        assert!((r.events[0].relative_direction - v2(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(r.events[0].time, 0.5);

        let flat = InternalSurface::segment(v2(-0.5, 0.2), v2(0.5, 0.2)).unwrap();
        let r = detect_crossings(&p, &flat, d.eps_geom());
        assert!(r.events.is_empty());
        assert_eq!(r.tangential_count, 0);
        let on_line = InternalSurface::segment(v2(-0.8, 0.0), v2(0.8, 0.0)).unwrap();
        assert_eq!(detect_crossings(&p, &on_line, d.eps_geom()).tangential_count, 1);
    }

    #[test]
    fn crossings_are_folded_and_sorted() {
        let (d, p) = disk_path(6, 20_000);
        let s = InternalSurface::polyline(&[v2(0.0, -0.5), v2(0.0, 0.5), v2(0.4, 0.6)]).unwrap();
        s.validate(&d).unwrap();
        let r = detect_crossings(&p, &s, d.eps_geom());
        assert!(r.events.len() > 1000);
        assert!(r.events.windows(2).all(|w| w[0].time <= w[1].time));
        for e in &r.events {
            assert!(e.relative_direction.x >= 0.0);
            assert!(e.angle().abs() <= FRAC_PI_2);
        }
    }

    #[test]
    fn surfaces_outside_the_domain_are_rejected() {
        let d = Domain::builtin("l-shape").unwrap();
        let s = InternalSurface::segment(v2(0.9, 0.25), v2(0.25, 0.9)).unwrap();
        assert!(s.validate(&d).is_err());
        assert!(InternalSurface::segment(v2(0.1, 0.1), v2(0.1, 0.1)).is_err());
        let t = InternalSurface::triangles(&[[Vector::new(0.2, 0.2, 0.5), Vector::new(0.8, 0.2, 0.5), Vector::new(0.5, 0.8, 0.5)]]).unwrap();
        t.validate(&Domain::builtin("unit-cube").unwrap()).unwrap();
        assert!(t.validate(&d).is_err());
    }

    #[test]
    fn triangle_crossings_in_the_cube() {
        let d = Domain::builtin("unit-cube").unwrap();
        let law = ReflectionLaw::cosine(3).unwrap();
        let z = 0.5;
        let t = InternalSurface::triangles(&[
            [Vector::new(0.0, 0.0, z), Vector::new(1.0, 0.0, z), Vector::new(1.0, 1.0, z)],
            [Vector::new(0.0, 0.0, z), Vector::new(1.0, 1.0, z), Vector::new(0.0, 1.0, z)],
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = BilliardPath::simulate(&d, &law, Start::Stationary, 5000, &mut rng).unwrap();
        let r = detect_crossings(&p, &t, d.eps_geom());
        // each flight crosses the mid-plane iff its endpoints straddle it
        let straddle = (0..p.flights()).filter(|&i| (p.points()[i].z - z) * (p.points()[i + 1].z - z) < 0.0).count();
        assert!((r.events.len() as i64 - straddle as i64).abs() <= 2, "{} vs {straddle}", r.events.len());
    }

    #[test]
    fn direction_bins_cover_the_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut counts = vec![0u64; 16];
        for _ in 0..160_000 {
            counts[direction_bin(sample_sphere_direction(3, &mut rng), 3, 16)] += 1;
        }
        assert!(chi_square_uniform(&BinnedMeasure::from_counts(&counts)).unwrap().pass);
        assert_eq!(direction_bin(UnitVector::E1, 2, 8), 0);
        assert_eq!(direction_bin(UnitVector::new(v2(0.0, -1.0)).unwrap(), 2, 8), 6);
    }

    #[test]
    fn position_bins() {
        let disk = PositionBinning::for_domain(&Domain::builtin("unit-disk").unwrap()).unwrap();
        assert_eq!(disk.bins(), 8);
        assert_eq!(disk.bin(v2(0.1, 0.1)), 0);
        assert_eq!(disk.bin(v2(-0.9, -0.1)), 6);
        let sq = PositionBinning::for_domain(&Domain::builtin("unit-square").unwrap()).unwrap();
        assert_eq!(sq.bin(v2(0.9, 0.9)), 7);
        assert!(PositionBinning::for_domain(&Domain::builtin("l-shape").unwrap()).is_none());
    }

    #[test]
    fn velocity_histogram_of_one_flight_is_a_point_mass() {
        let d = Domain::builtin("unit-disk").unwrap();
        let law = ReflectionLaw::cosine(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = BilliardPath::simulate(&d, &law, Start::Interior { x: Vector::ZERO, v: UnitVector::E1 }, 1, &mut rng).unwrap();
        let h = velocity_histogram(&p, 8, 0);
        assert_eq!(h.weights.iter().filter(|&&w| w > 0.0).count(), 1);
        assert_eq!(h.weights[0], 1.0);
    }

    #[test]
    fn boundary_start_matches_the_walk() {
        let d = Domain::builtin("unit-square").unwrap();
        let law = ReflectionLaw::cosine(2).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let start = random_start(&d, &mut a);
        let mut b = a.clone();
        let path = BilliardPath::simulate(&d, &law, Start::Boundary(start), 50, &mut a).unwrap();
        let rec = walk::run(start, 50, &law, &d, &mut b).unwrap();
        assert_eq!(path, BilliardPath::from_walk(&rec, 2));
    }

    #[test]
    fn flight_csv_layout() {
        let (_, p) = disk_path(12, 3);
        let mut buf = Vec::new();
        p.write_flights_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "n,tau,x,y,vx,vy");
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn antipodal_bins_hold_the_reversed_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for (dim, bins) in [(2, 8), (2, 50), (3, 8), (3, 48)] {
            for _ in 0..2000 {
                let v = sample_sphere_direction(dim, &mut rng);
                let back = UnitVector::new_unchecked(-v.vec());
                assert_eq!(antipodal_bin(direction_bin(v, dim, bins), dim, bins), direction_bin(back, dim, bins));
            }
        }
    }

    #[test]
    fn head_keeps_the_first_flights() {
        let (_, p) = disk_path(14, 20);
        let h = p.head(5);
        assert_eq!(h.flights(), 5);
        assert_eq!(h.points(), &p.points()[..6]);
        assert_eq!(p.head(100), p);
    }
}
