//! Boundary-to-boundary random walk with flight times.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundaryPoint, Domain, GeometryError};
use crate::reflection::{build_frame, ReflectionError, ReflectionLaw};
use crate::stats::{wilson_interval, BinnedMeasure};
use crate::vector::{Point, UnitVector};

/// Direction draws allowed before a step gives up on a corner.
pub const MAX_RESAMPLES: u32 = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("{attempts} consecutive directions from {position:?} hit non-regular points")]
    StuckAtCorner { position: Point, attempts: u32 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
    #[error("law dimension {law} does not match domain dimension {domain}")]
    DimensionMismatch { law: usize, domain: usize },
}

pub type Result<T> = std::result::Result<T, WalkError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkState {
    pub position: BoundaryPoint,
    pub step_index: u64,
    /// Total flight length so far (time, at unit speed).
    pub local_time: f64,
}

impl WalkState {
    pub fn start(position: BoundaryPoint) -> Self {
        WalkState { position, step_index: 0, local_time: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub states: Vec<WalkState>,
    pub resample_count: u64,
    /// Every `thin`-th state is kept.
    pub thin: u64,
}

impl WalkRecord {
    pub fn steps(&self) -> u64 {
        self.states.last().map_or(0, |s| s.step_index)
    }

    /// Rows `step_index, component_id, patch_coord, x, y(, z), tau`.
    pub fn write_csv<W: std::io::Write>(&self, dim: usize, mut out: W) -> std::io::Result<()> {
        let header = if dim == 3 { "step_index,component_id,patch_coord,x,y,z,tau" } else { "step_index,component_id,patch_coord,x,y,tau" };
        writeln!(out, "{header}")?;
        for s in &self.states {
            let p = &s.position;
            write!(out, "{},{},{},{},{}", s.step_index, p.component, p.patch_coord, p.position.x, p.position.y)?;
            if dim == 3 {
                write!(out, ",{}", p.position.z)?;
            }
            writeln!(out, ",{}", s.local_time)?;
        }
        Ok(())
    }
}

/// Moves from `state` along `u` to the next wall.
pub fn step_with_direction(state: &WalkState, domain: &Domain, u: UnitVector) -> Result<WalkState> {
    let hit = domain.ray_cast_from(&state.position, u)?;
    Ok(WalkState { position: hit.point, step_index: state.step_index + 1, local_time: state.local_time + hit.distance })
}

/// One reflection and flight. Returns the new state and the number of
/// directions discarded because they landed on a non-regular point.
pub fn step<R: Rng + ?Sized>(state: &WalkState, law: &ReflectionLaw, domain: &Domain, rng: &mut R) -> Result<(WalkState, u32)> {
    if law.dim() != domain.dim() {
        return Err(WalkError::DimensionMismatch { law: law.dim(), domain: domain.dim() });
    }
    let frame = build_frame(&state.position, domain.dim())?;
    for resamples in 0..MAX_RESAMPLES {
        let u = law.sample_direction(&frame, rng);
        let next = step_with_direction(state, domain, u)?;
        if next.position.is_regular {
            return Ok((next, resamples));
        }
    }
    Err(WalkError::StuckAtCorner { position: state.position.position, attempts: MAX_RESAMPLES })
}

/// A uniform boundary point, redrawn until regular.
pub fn random_start<R: Rng + ?Sized>(domain: &Domain, rng: &mut R) -> BoundaryPoint {
    loop {
        let p = domain.sample_boundary_uniform(rng);
        if p.is_regular {
            return p;
        }
    }
}

/// Streaming walk that keeps only the current state.
#[derive(Debug, Clone)]
pub struct Walk<'a> {
    domain: &'a Domain,
    law: &'a ReflectionLaw,
    pub state: WalkState,
    pub resample_count: u64,
}

impl<'a> Walk<'a> {
    pub fn new(domain: &'a Domain, law: &'a ReflectionLaw, start: BoundaryPoint) -> Self {
        Walk { domain, law, state: WalkState::start(start), resample_count: 0 }
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<&WalkState> {
        let (next, r) = step(&self.state, self.law, self.domain, rng)?;
        self.state = next;
        self.resample_count += r as u64;
        Ok(&self.state)
    }

    /// Advances `n` steps without recording.
    pub fn skip<R: Rng + ?Sized>(&mut self, n: u64, rng: &mut R) -> Result<()> {
        for _ in 0..n {
            self.advance(rng)?;
        }
        Ok(())
    }
}

pub fn run<R: Rng + ?Sized>(
    start: BoundaryPoint,
    n_steps: u64,
    law: &ReflectionLaw,
    domain: &Domain,
    rng: &mut R,
) -> Result<WalkRecord> {
    run_thinned(start, n_steps, 1, law, domain, rng)
}

/// Like [`run`], keeping the start and every `thin`-th state after it.
pub fn run_thinned<R: Rng + ?Sized>(
    start: BoundaryPoint,
    n_steps: u64,
    thin: u64,
    law: &ReflectionLaw,
    domain: &Domain,
    rng: &mut R,
) -> Result<WalkRecord> {
    let thin = thin.max(1);
    let mut walk = Walk::new(domain, law, start);
    let mut states = Vec::with_capacity((n_steps / thin + 1) as usize);
    states.push(walk.state.clone());
    for i in 1..=n_steps {
        walk.advance(rng)?;
        if i % thin == 0 {
            states.push(walk.state.clone());
        }
    }
    Ok(WalkRecord { states, resample_count: walk.resample_count, thin })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryHistogram {
    pub counts: BinnedMeasure,
    pub frequencies: Vec<f64>,
    /// 95% Wilson intervals per bin.
    pub intervals: Vec<(f64, f64)>,
}

impl BoundaryHistogram {
    pub fn from_counts(counts: &[u64]) -> Self {
        let n: u64 = counts.iter().sum();
        BoundaryHistogram {
            counts: BinnedMeasure::from_counts(counts),
            frequencies: counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect(),
            intervals: counts.iter().map(|&c| wilson_interval(c, n, 1.959963984540054)).collect(),
        }
    }
}

/// Occupation frequencies over `bins` equal-measure cells of the boundary.
pub fn empirical_boundary_density(record: &WalkRecord, domain: &Domain, bins: usize) -> BoundaryHistogram {
    let mut counts = vec![0u64; bins];
    for s in &record.states {
        counts[domain.boundary_bin(&s.position, bins)] += 1;
    }
    BoundaryHistogram::from_counts(&counts)
}
