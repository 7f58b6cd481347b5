//! Random chords, mean-chord estimators, Bertrand constructions and induced chords.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billiard::Region;
use crate::geometry::{sample_sphere_direction, BoundaryPoint, Domain, GeometryError};
use crate::reflection::{constants, ReflectionError, ReflectionLaw};
use crate::stats::{Accumulator, Estimate};
use crate::vector::Point;
use crate::walk::{random_start, step, WalkError, WalkState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChordError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
    #[error("Bertrand method must be 1, 2 or 3, got {0}")]
    UnknownMethod(u8),
    #[error("subdomain point {0:?} is outside the domain")]
    NotContained(Point),
}

pub type Result<T> = std::result::Result<T, ChordError>;

/// Unordered pair of mutually visible boundary points. `a` and `b` keep the
/// order in which they were drawn; equality ignores it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chord {
    pub a: BoundaryPoint,
    pub b: BoundaryPoint,
    pub length: f64,
}

impl Chord {
    pub fn new(a: BoundaryPoint, b: BoundaryPoint) -> Self {
        let length = a.position.distance(b.position);
        Chord { a, b, length }
    }

    /// Endpoints in lexicographic order.
    pub fn canonical(&self) -> (Point, Point) {
        let (p, q) = (self.a.position, self.b.position);
        if p.lex_cmp(q).is_le() { (p, q) } else { (q, p) }
    }
}

impl PartialEq for Chord {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

/// Draws chords: a uniform boundary point joined to the wall hit along a
/// cosine-distributed direction.
#[derive(Debug, Clone)]
pub struct ChordSampler<'a> {
    domain: &'a Domain,
    law: ReflectionLaw,
    pub resample_count: u64,
}

impl<'a> ChordSampler<'a> {
    pub fn new(domain: &'a Domain) -> Result<Self> {
        Ok(ChordSampler { domain, law: ReflectionLaw::cosine(domain.dim())?, resample_count: 0 })
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Chord> {
        let a = random_start(self.domain, rng);
        let (next, r) = step(&WalkState::start(a), &self.law, self.domain, rng)?;
        self.resample_count += r as u64;
        Ok(Chord { a, b: next.position, length: next.local_time })
    }
}

pub fn sample_chord<R: Rng + ?Sized>(domain: &Domain, rng: &mut R) -> Result<Chord> {
    ChordSampler::new(domain)?.sample(rng)
}

/// Sample mean of `n` chord lengths.
pub fn mean_chord_estimate<R: Rng + ?Sized>(domain: &Domain, n: u64, rng: &mut R) -> Result<Estimate> {
    let mut s = ChordSampler::new(domain)?;
    let mut acc = Accumulator::default();
    for _ in 0..n {
        acc.push(s.sample(rng)?.length);
    }
    Ok(Estimate::from_accumulator(&acc))
}

/// Mean chord divided by the dimension constant: an estimate of |D|/|∂D|.
pub fn volume_to_surface<R: Rng + ?Sized>(domain: &Domain, n: u64, rng: &mut R) -> Result<Estimate> {
    let kappa = constants(domain.dim())?.kappa_d;
    let m = mean_chord_estimate(domain, n, rng)?;
    Ok(Estimate { estimate: m.estimate / kappa, stderr: m.stderr / kappa, n: m.n })
}

/// Mean length of chord inside `region`.
pub fn mean_occupation<R: Rng + ?Sized>(domain: &Domain, region: &Region, n: u64, rng: &mut R) -> Result<Estimate> {
    let mut s = ChordSampler::new(domain)?;
    let mut acc = Accumulator::default();
    for _ in 0..n {
        let c = s.sample(rng)?;
        acc.push(region.segment_length(c.a.position, c.b.position));
    }
    Ok(Estimate::from_accumulator(&acc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedChordSet {
    pub parent: Chord,
    pub pieces: Vec<Chord>,
    pub iota: usize,
}

/// Connected components of the open chord inside `subdomain`, in order from `a`.
pub fn induced_chords(chord: &Chord, subdomain: &Domain) -> Result<InducedChordSet> {
    let (p, q) = (chord.a.position, chord.b.position);
    let mut cuts = vec![0.0];
    cuts.extend(subdomain.segment_crossings(p, q));
    cuts.push(1.0);
    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 - s0 <= 0.0 || !subdomain.contains(p + (q - p) * (0.5 * (s0 + s1))) {
            continue;
        }
        let ends = [p + (q - p) * s0, p + (q - p) * s1];
        let [e0, e1] = ends.map(|x| subdomain.locate(x));
        pieces.push(Chord::new(e0?, e1?));
    }
    Ok(InducedChordSet { parent: chord.clone(), iota: pieces.len(), pieces })
}

/// Checks 10³ uniform boundary points of `sub` for membership in the closure of `domain`.
pub fn check_containment<R: Rng + ?Sized>(domain: &Domain, sub: &Domain, rng: &mut R) -> Result<()> {
    let tol = 10.0 * domain.eps_geom();
    for _ in 0..1000 {
        let p = sub.sample_boundary_uniform(rng).position;
        if !domain.contains(p) && domain.distance_to_boundary(p) > tol {
            return Err(ChordError::NotContained(p));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedStatistics {
    pub hit_prob: Estimate,
    pub mean_iota: Estimate,
    pub piece_lengths: Vec<f64>,
    /// The first pieces found, kept for endpoint-density comparisons.
    pub piece_samples: Vec<Chord>,
}

pub fn induced_chord_statistics<R: Rng + ?Sized>(
    domain: &Domain,
    sub: &Domain,
    n: u64,
    keep: usize,
    rng: &mut R,
) -> Result<InducedStatistics> {
    check_containment(domain, sub, rng)?;
    let mut s = ChordSampler::new(domain)?;
    let mut hits = 0u64;
    let mut iota = Accumulator::default();
    let mut piece_lengths = Vec::new();
    let mut piece_samples = Vec::new();
    for _ in 0..n {
        let set = induced_chords(&s.sample(rng)?, sub)?;
        hits += u64::from(set.iota > 0);
        iota.push(set.iota as f64);
        for piece in set.pieces {
            piece_lengths.push(piece.length);
            if piece_samples.len() < keep {
                piece_samples.push(piece);
            }
        }
    }
    Ok(InducedStatistics {
        hit_prob: Estimate::proportion(hits, n),
        mean_iota: Estimate::from_accumulator(&iota),
        piece_lengths,
        piece_samples,
    })
}

/// Chord length on the unit disk under one of Bertrand's three constructions:
/// 1, two uniform boundary points; 2, uniform distance of the midpoint along
/// a random radius; 3, midpoint uniform in the disk.
pub fn bertrand_length<R: Rng + ?Sized>(method: u8, rng: &mut R) -> Result<f64> {
    Ok(match method {
        1 => {
            let delta = TAU * (rng.gen::<f64>() - rng.gen::<f64>());
            2.0 * (0.5 * delta).sin().abs()
        }
        2 => {
            let d: f64 = rng.gen();
            2.0 * (1.0 - d * d).sqrt()
        }
        3 => {
            let r2: f64 = rng.gen();
            2.0 * (1.0 - r2).sqrt()
        }
        m => return Err(ChordError::UnknownMethod(m)),
    })
}

/// P(chord longer than √3, the inscribed equilateral triangle's side).
pub fn bertrand_probability<R: Rng + ?Sized>(method: u8, n: u64, rng: &mut R) -> Result<Estimate> {
    let side = 3f64.sqrt();
    let mut hits = 0;
    for _ in 0..n {
        hits += u64::from(bertrand_length(method, rng)? > side);
    }
    Ok(Estimate::proportion(hits, n))
}

/// Self-normalized importance-sampling estimate of E[f(L)] under the random
/// chord law, from chords through uniform interior points in uniform directions
/// (which are length-biased, so each gets weight 1/L).
pub fn interior_construction_estimate<R: Rng + ?Sized>(
    domain: &Domain,
    n: u64,
    rng: &mut R,
    f: impl Fn(f64) -> f64,
) -> Result<Estimate> {
    let mut fw = Vec::with_capacity(n as usize);
    let mut ws = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let x = domain.sample_interior_uniform(rng);
        let v = sample_sphere_direction(domain.dim(), rng);
        let fwd = domain.ray_cast(x, v)?;
        let back = domain.ray_cast(x, -v)?;
        let len = fwd.distance + back.distance;
        fw.push(f(len) / len);
        ws.push(1.0 / len);
    }
    let nf = n as f64;
    let (sfw, sw) = (fw.iter().sum::<f64>(), ws.iter().sum::<f64>());
    let ratio = sfw / sw;
    let mean_w = sw / nf;
    let resid: Accumulator = fw.iter().zip(&ws).fold(Accumulator::default(), |mut acc, (a, w)| {
        acc.push(a - ratio * w);
        acc
    });
    Ok(Estimate { estimate: ratio, stderr: resid.stderr() / mean_w, n })
}

/// Rows `ax, ay(, az), bx, by(, bz), length`.
pub fn write_chords_csv<W: std::io::Write>(chords: &[Chord], dim: usize, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", if dim == 3 { "ax,ay,az,bx,by,bz,length" } else { "ax,ay,bx,by,length" })?;
    for c in chords {
        let (a, b) = (c.a.position, c.b.position);
        if dim == 3 {
            writeln!(out, "{},{},{},{},{},{},{}", a.x, a.y, a.z, b.x, b.y, b.z, c.length)?;
        } else {
            writeln!(out, "{},{},{},{},{}", a.x, a.y, b.x, b.y, c.length)?;
        }
    }
    Ok(())
}

/// Exact chord-length CDF for the unit disk under the random chord law.
pub fn disk_chord_length_cdf(l: f64) -> f64 {
    // L = 2 cos(phi) with sin(phi) uniform on (-1, 1)
    1.0 - (1.0 - (l / 2.0).clamp(0.0, 1.0).powi(2)).sqrt()
}

pub const DISK_MEAN_CHORD: f64 = PI / 2.0;
