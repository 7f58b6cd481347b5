use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{z_test, Check, ExperimentConfig, ExperimentName, NamedEstimate, Outputs, Prepared, Result, RunReport};
use super::{DEFAULT_BATCHES, DEFAULT_BINS, DEFAULT_BURN_IN, DEFAULT_KEEP};
use crate::billiard::{
    antipodal_bin, detect_crossings, direction_bin, product_uniformity, velocity_histogram, BilliardPath, CrossingReport,
    PositionBinning, Region, Start,
};
use crate::chords::{bertrand_length, disk_chord_length_cdf, induced_chords, write_chords_csv, Chord, ChordSampler};
use crate::geometry::{BoundaryPoint, Domain, ShapeKind};
use crate::kernel::{assemble_with, build_mesh, KernelSystem, PanelMesh, Quadrature, ROW_SUM_TOLERANCE};
use crate::reflection::{constants, ReflectionLaw};
use crate::rng::{replica_rng, split_work};
use crate::stats::{
    batch_means, bonferroni, chi_square_uniform, ks_test, ks_two_sample, log_linear_slope,
    symmetry_test, tv_distance, Accumulator, BinnedMeasure, Estimate, ALPHA,
};
use crate::walk::{random_start, Walk, WalkRecord, WalkState};

pub(super) fn run(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    match cfg.experiment {
        ExperimentName::WalkStationarity => walk_stationarity(cfg, prep, report, out),
        ExperimentName::BilliardStationarity => billiard_stationarity(cfg, prep, report, out),
        ExperimentName::MeanChord => mean_chord(cfg, prep, report, out),
        ExperimentName::Bertrand => bertrand(cfg, prep, report, out),
        ExperimentName::InducedChords => induced(cfg, prep, report, out),
        ExperimentName::Crossings => crossings(cfg, prep, report, out),
        ExperimentName::KernelSolve => kernel_solve(cfg, prep, report, out),
        ExperimentName::Clt => clt(cfg, prep, report, out),
        ExperimentName::ErgodicityDecay => ergodicity_decay(cfg, prep, report, out),
        ExperimentName::Reversal => reversal(cfg, prep, report, out),
    }
}

/// Runs `f(replica, rng, share)` on every replica concurrently and returns
/// the results in replica order.
fn replicas<T: Send>(cfg: &ExperimentConfig, n: u64, f: impl Fn(usize, &mut ChaCha8Rng, u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    split_work(n, cfg.replicas())
        .into_par_iter()
        .enumerate()
        .map(|(r, share)| f(r, &mut replica_rng(cfg.seed, r as u64), share))
        .collect()
}

fn mean_chord_exact(domain: &Domain) -> Result<f64> {
    Ok(constants(domain.dim())?.kappa_d * domain.volume() / domain.boundary_measure())
}

fn bins(cfg: &ExperimentConfig) -> usize {
    cfg.params.bins.unwrap_or(DEFAULT_BINS)
}

fn keep(cfg: &ExperimentConfig) -> usize {
    cfg.params.keep.unwrap_or(DEFAULT_KEEP)
}

fn burn_in(cfg: &ExperimentConfig) -> u64 {
    cfg.params.burn_in.unwrap_or(DEFAULT_BURN_IN)
}

fn sum_counts(parts: impl Iterator<Item = Vec<u64>>, bins: usize) -> Vec<u64> {
    parts.fold(vec![0; bins], |mut acc, c| {
        acc.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        acc
    })
}

fn solve_kernel(cfg: &ExperimentConfig, prep: &Prepared, panels: usize) -> Result<(PanelMesh, KernelSystem, Vec<f64>)> {
    let quadrature = cfg.params.quadrature.unwrap_or_else(|| Quadrature::default_for(&prep.domain));
    let mesh = build_mesh(&prep.domain, panels)?;
    let system = assemble_with(&mesh, &prep.law, &prep.domain, quadrature, false)?;
    let psi = system.invariant_density(cfg.params.tolerance.unwrap_or(1e-13))?;
    Ok((mesh, system, psi.values))
}

/// Spreads panel masses over equal-measure boundary bins, splitting arc
/// panels that straddle bin edges.
fn panel_bin_masses(domain: &Domain, mesh: &PanelMesh, masses: &[f64], bins: usize) -> Vec<f64> {
    let total = domain.boundary_measure();
    let mut out = vec![0.0; bins];
    for (p, &m) in mesh.panels.iter().zip(masses) {
        match p.arc {
            Some((s0, s1)) => {
                let offset = domain.boundary_coordinate(&p.midpoint) - p.midpoint.patch_coord;
                let (c0, c1) = ((offset + s0) / total * bins as f64, (offset + s1) / total * bins as f64);
                let mut lo = c0;
                while lo < c1 - 1e-12 {
                    let b = (lo.floor() as usize).min(bins - 1);
                    let hi = (b as f64 + 1.0).min(c1);
                    out[b] += m * (hi - lo) / (c1 - c0);
                    lo = hi;
                }
            }
            None => out[domain.boundary_bin(&p.midpoint, bins)] += m,
        }
    }
    out
}

/// Bin probabilities of the stationary law: uniform for the cosine law,
/// otherwise from the kernel solution.
fn reference_probabilities(cfg: &ExperimentConfig, prep: &Prepared, bins: usize) -> Result<Option<Vec<f64>>> {
    if prep.law.is_cosine() {
        return Ok(None);
    }
    let (mesh, _, psi) = solve_kernel(cfg, prep, cfg.params.panels.unwrap_or(400))?;
    let masses: Vec<f64> = psi.iter().zip(&mesh.panels).map(|(v, p)| v * p.measure).collect();
    Ok(Some(panel_bin_masses(&prep.domain, &mesh, &masses, bins)))
}

/// Expected TV distance of an n-sample histogram from its own bin probabilities.
fn noise_floor(probs: &[f64], n: u64) -> f64 {
    probs.iter().map(|&p| 0.5 * (2.0 * p * (1.0 - p) / (std::f64::consts::PI * n as f64)).sqrt()).sum()
}

/// `base`, widened to three times the sampling noise when `n` is small.
fn tv_limit(base: f64, probs: &[f64], n: u64) -> f64 {
    base.max(3.0 * noise_floor(probs, n))
}

fn uniform_probs(bins: usize) -> Vec<f64> {
    vec![1.0 / bins as f64; bins]
}

fn measure_of(probs: &[f64]) -> BinnedMeasure {
    BinnedMeasure { weights: probs.to_vec() }
}

fn histogram_csv(buf: &mut Vec<u8>, counts: &[u64], reference: &[f64]) -> std::io::Result<()> {
    use std::io::Write;
    let h = crate::walk::BoundaryHistogram::from_counts(counts);
    writeln!(buf, "bin,count,frequency,lower,upper,reference")?;
    for (i, &c) in counts.iter().enumerate() {
        writeln!(buf, "{i},{c},{},{},{},{}", h.frequencies[i], h.intervals[i].0, h.intervals[i].1, reference[i])?;
    }
    Ok(())
}

struct WalkPart {
    counts: Vec<u64>,
    flight_sum: f64,
    min_increment: f64,
    resamples: u64,
    trace: Vec<WalkState>,
}

fn walk_stationarity(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    let (domain, law, nb, keep) = (&prep.domain, &prep.law, bins(cfg), keep(cfg));
    let parts = replicas(cfg, cfg.n, |r, rng, share| {
        let mut walk = Walk::new(domain, law, random_start(domain, rng));
        walk.skip(burn_in(cfg), rng)?;
        let mut part = WalkPart { counts: vec![0; nb], flight_sum: 0.0, min_increment: f64::INFINITY, resamples: 0, trace: Vec::new() };
        for _ in 0..share {
            let before = walk.state.local_time;
            let s = walk.advance(rng)?;
            part.counts[domain.boundary_bin(&s.position, nb)] += 1;
            part.flight_sum += s.local_time - before;
            part.min_increment = part.min_increment.min(s.local_time - before);
            if r == 0 && part.trace.len() < keep {
                part.trace.push(s.clone());
            }
        }
        part.resamples = walk.resample_count;
        Ok(part)
    })?;
    let counts = sum_counts(parts.iter().map(|p| p.counts.clone()), nb);
    let resamples: u64 = parts.iter().map(|p| p.resamples).sum();
    report.counters.resample_count = resamples;
    let empirical = BinnedMeasure::from_counts(&counts);
    let uniform = BinnedMeasure::uniform(nb);
    let tv_uniform = tv_distance(&empirical, &uniform)?;
    report.values.insert("tv_to_uniform".into(), tv_uniform);
    let reference = reference_probabilities(cfg, prep, nb)?;
    match &reference {
        None => {
            report.tests.push(chi_square_uniform(&empirical)?.named("boundary-uniformity"));
            report.checks.push(Check::below("tv-to-uniform", tv_uniform, tv_limit(0.01, &uniform_probs(nb), cfg.n)));
            let mean_flight = parts.iter().map(|p| p.flight_sum).sum::<f64>() / cfg.n as f64;
            let target = mean_chord_exact(domain)?;
            report.values.insert("mean_flight".into(), mean_flight);
            report.checks.push(Check::below("mean-flight-relative-error", (mean_flight / target - 1.0).abs(), 0.005));
        }
        Some(probs) => {
            let tv = tv_distance(&empirical, &measure_of(probs))?;
            report.checks.push(Check::below("tv-to-kernel", tv, tv_limit(0.02, probs, cfg.n)));
        }
    }
    let min_inc = parts.iter().map(|p| p.min_increment).fold(f64::INFINITY, f64::min);
    report.checks.push(Check::above("min-flight", min_inc, 0.0));
    report.checks.push(Check::below("resample-rate", resamples as f64 / cfg.n as f64, 1e-4));
    let reference = reference.unwrap_or_else(|| uniform_probs(nb));
    out.add("histogram.csv", |b| histogram_csv(b, &counts, &reference));
    let record = WalkRecord { states: parts.into_iter().next().map(|p| p.trace).unwrap_or_default(), resample_count: resamples, thin: 1 };
    out.add("walk.csv", |b| record.write_csv(domain.dim(), b));
    Ok(())
}

struct BilliardPart {
    samples: Vec<(crate::Point, crate::UnitVector)>,
    velocity: BinnedMeasure,
    head: Option<BilliardPath>,
    resamples: u64,
}

const VELOCITY_BINS: usize = 16;
const PRODUCT_BINS: usize = 8;

fn billiard_stationarity(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    let (domain, law, dim) = (&prep.domain, &prep.law, prep.domain.dim());
    let burn = burn_in(cfg) as usize;
    let spacing = 2.0 * mean_chord_exact(domain)?;
    let parts = replicas(cfg, cfg.n, |r, rng, share| {
        let path = BilliardPath::simulate(domain, law, Start::Stationary, burn + share as usize, rng)?;
        let t0 = path.times()[burn.min(path.flights())];
        Ok(BilliardPart {
            samples: path.sample_times(t0, spacing),
            velocity: velocity_histogram(&path, VELOCITY_BINS, burn),
            head: (r == 0).then(|| path.head(keep(cfg))),
            resamples: path.resample_count,
        })
    })?;
    report.counters.resample_count = parts.iter().map(|p| p.resamples).sum();
    let samples: Vec<_> = parts.iter().flat_map(|p| p.samples.iter().cloned()).collect();
    report.values.insert("time_samples".into(), samples.len() as f64);
    match PositionBinning::for_domain(domain) {
        Some(binning) => report.tests.extend(product_uniformity(&samples, &binning, dim, PRODUCT_BINS)?),
        None => {
            let mut dirs = BinnedMeasure::zeros(PRODUCT_BINS);
            samples.iter().for_each(|(_, v)| dirs.add(direction_bin(*v, dim, PRODUCT_BINS), 1.0));
            report.tests.push(chi_square_uniform(&dirs)?.named("direction-uniformity"));
        }
    }
    let mut velocity = BinnedMeasure::zeros(VELOCITY_BINS);
    for p in &parts {
        velocity.merge(&p.velocity)?;
    }
    let tv = tv_distance(&velocity, &BinnedMeasure::uniform(VELOCITY_BINS))?;
    let limit = tv_limit(0.01, &uniform_probs(VELOCITY_BINS), cfg.n);
    report.checks.push(Check::below("velocity-tv-to-uniform", tv, limit));
    let region = match (&prep.region, domain.kind()) {
        (Some(r), _) => Some(r.clone()),
        (None, ShapeKind::Disk(b)) => Some(Region::ball(b.center, 0.5 * b.radius)),
        _ => None,
    };
    if let Some(region) = region {
        let inside = samples.iter().filter(|(p, _)| region.contains(*p)).count() as u64;
        let e = Estimate::proportion(inside, samples.len() as u64);
        let target = region.measure(domain) / domain.volume();
        report.tests.push(z_test("occupation-fraction", &e, target, 3.0));
        report.estimates.push(NamedEstimate::new("occupation-fraction", &e, Some(target)));
    }
    out.add("samples.csv", |b| {
        use std::io::Write;
        writeln!(b, "{}", if dim == 3 { "x,y,z,vx,vy,vz" } else { "x,y,vx,vy" })?;
        for (p, v) in samples.iter().take(keep(cfg)) {
            let v = v.vec();
            if dim == 3 {
                writeln!(b, "{},{},{},{},{},{}", p.x, p.y, p.z, v.x, v.y, v.z)?;
            } else {
                writeln!(b, "{},{},{},{}", p.x, p.y, v.x, v.y)?;
            }
        }
        Ok(())
    });
    if let Some(head) = parts.into_iter().next().and_then(|p| p.head) {
        out.add("flights.csv", |b| head.write_flights_csv(b));
    }
    Ok(())
}

struct ChordPart {
    acc: Accumulator,
    lengths: Vec<f64>,
    trace: Vec<Chord>,
    resamples: u64,
}

fn mean_chord(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    let domain = &prep.domain;
    let disk_radius = match domain.kind() {
        ShapeKind::Disk(b) => Some(b.radius),
        _ => None,
    };
    let parts = replicas(cfg, cfg.n, |r, rng, share| {
        let mut sampler = ChordSampler::new(domain)?;
        let mut part = ChordPart { acc: Accumulator::default(), lengths: Vec::new(), trace: Vec::new(), resamples: 0 };
        for _ in 0..share {
            let c = sampler.sample(rng)?;
            part.acc.push(c.length);
            if disk_radius.is_some() {
                part.lengths.push(c.length);
            }
            if r == 0 && part.trace.len() < keep(cfg) {
                part.trace.push(c);
            }
        }
        part.resamples = sampler.resample_count;
        Ok(part)
    })?;
    report.counters.resample_count = parts.iter().map(|p| p.resamples).sum();
    let mut acc = Accumulator::default();
    parts.iter().for_each(|p| acc.merge(&p.acc));
    let e = Estimate::from_accumulator(&acc);
    let target = mean_chord_exact(domain)?;
    report.tests.push(z_test("mean-chord", &e, target, 3.0));
    report.estimates.push(NamedEstimate::new("mean-chord", &e, Some(target)));
    let kappa = constants(domain.dim())?.kappa_d;
    let ratio = Estimate { estimate: e.estimate / kappa, stderr: e.stderr / kappa, n: e.n };
    let exact_ratio = domain.volume() / domain.boundary_measure();
    report.estimates.push(NamedEstimate::new("volume-to-surface", &ratio, Some(exact_ratio)));
    report.checks.push(Check::below("volume-to-surface-relative-error", (ratio.estimate / exact_ratio - 1.0).abs(), 0.01));
    if let Some(radius) = disk_radius {
        let lengths: Vec<f64> = parts.iter().flat_map(|p| p.lengths.iter().copied()).collect();
        report.tests.push(ks_test(&lengths, |l| disk_chord_length_cdf(l / radius))?.named("chord-length-distribution"));
    }
    let trace = parts.into_iter().next().map(|p| p.trace).unwrap_or_default();
    out.add("chords.csv", |b| write_chords_csv(&trace, domain.dim(), b));
    Ok(())
}

const BERTRAND_TARGETS: [f64; 3] = [1.0 / 3.0, 0.5, 0.25];

fn bertrand(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    let methods: Vec<u8> = cfg.params.method.map_or(vec![1, 2, 3], |m| vec![m]);
    let side = 3f64.sqrt();
    let parts = replicas(cfg, cfg.n, |_, rng, share| {
        let mut hits = [0u64; 3];
        let mut method2 = Vec::new();
        let mut library = Vec::new();
        for &m in &methods {
            for _ in 0..share {
                let l = bertrand_length(m, rng)?;
                hits[m as usize - 1] += u64::from(l > side);
                if m == 2 {
                    method2.push(l);
                }
            }
        }
        if methods.contains(&2) {
            let mut sampler = ChordSampler::new(&prep.domain)?;
            for _ in 0..share {
                library.push(sampler.sample(rng)?.length);
            }
        }
        Ok((hits, method2, library))
    })?;
    let mut rows = Vec::new();
    for &m in &methods {
        let k = m as usize - 1;
        let hits: u64 = parts.iter().map(|p| p.0[k]).sum();
        let e = Estimate::proportion(hits, cfg.n);
        let target = BERTRAND_TARGETS[k];
        report.tests.push(z_test(format!("bertrand-{m}"), &e, target, 3.0));
        report.estimates.push(NamedEstimate::new(format!("bertrand-{m}"), &e, Some(target)));
        rows.push((m, e, target));
    }
    if methods.contains(&2) {
        let a: Vec<f64> = parts.iter().flat_map(|p| p.1.iter().copied()).collect();
        let b: Vec<f64> = parts.iter().flat_map(|p| p.2.iter().copied()).collect();
        report.tests.push(ks_two_sample(&a, &b)?.named("bertrand-2-vs-chord-sampler"));
    }
    out.add("bertrand.csv", |b| {
        use std::io::Write;
        writeln!(b, "method,estimate,stderr,target,z")?;
        for (m, e, t) in &rows {
            writeln!(b, "{m},{},{},{t},{}", e.estimate, e.stderr, e.z_score(*t))?;
        }
        Ok(())
    });
    Ok(())
}

struct InducedPart {
    hits: u64,
    iota: Accumulator,
    pieces: Vec<f64>,
    direct: Vec<f64>,
    trace: Vec<Chord>,
}

fn induced(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    let (domain, sub) = (&prep.domain, prep.subdomain.as_ref().expect("checked by prepare"));
    let convex = sub.is_convex();
    let parts = replicas(cfg, cfg.n, |r, rng, share| {
        let mut sampler = ChordSampler::new(domain)?;
        let mut part = InducedPart { hits: 0, iota: Accumulator::default(), pieces: Vec::new(), direct: Vec::new(), trace: Vec::new() };
        for _ in 0..share {
            let set = induced_chords(&sampler.sample(rng)?, sub)?;
            part.hits += u64::from(set.iota > 0);
            part.iota.push(set.iota as f64);
            for piece in set.pieces {
                part.pieces.push(piece.length);
                if r == 0 && part.trace.len() < keep(cfg) {
                    part.trace.push(piece);
                }
            }
        }
        if convex {
            let mut direct = ChordSampler::new(sub)?;
            for _ in 0..part.pieces.len() {
                part.direct.push(direct.sample(rng)?.length);
            }
        }
        Ok(part)
    })?;
    let ratio = sub.boundary_measure() / domain.boundary_measure();
    let hits: u64 = parts.iter().map(|p| p.hits).sum();
    let hit = Estimate::proportion(hits, cfg.n);
    let mut acc = Accumulator::default();
    parts.iter().for_each(|p| acc.merge(&p.iota));
    let iota = Estimate::from_accumulator(&acc);
    report.tests.push(z_test("mean-iota", &iota, ratio, 3.0));
    report.estimates.push(NamedEstimate::new("mean-iota", &iota, Some(ratio)));
    if convex {
        report.tests.push(z_test("hit-probability", &hit, ratio, 3.0));
        report.estimates.push(NamedEstimate::new("hit-probability", &hit, Some(ratio)));
        let a: Vec<f64> = parts.iter().flat_map(|p| p.pieces.iter().copied()).collect();
        let b: Vec<f64> = parts.iter().flat_map(|p| p.direct.iter().copied()).collect();
        report.tests.push(ks_two_sample(&a, &b)?.named("piece-length-distribution"));
    } else {
        report.estimates.push(NamedEstimate::new("hit-probability", &hit, None));
    }
    let trace = parts.into_iter().next().map(|p| p.trace).unwrap_or_default();
    out.add("pieces.csv", |b| write_chords_csv(&trace, domain.dim(), b));
    Ok(())
}

fn crossings(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    let (domain, law, dim) = (&prep.domain, &prep.law, prep.domain.dim());
    let surface = prep.surface.as_ref().expect("checked by prepare");
    let burn = burn_in(cfg) as usize;
    let parts = replicas(cfg, cfg.n, |_, rng, share| {
        let path = BilliardPath::simulate(domain, law, Start::Stationary, burn + share as usize, rng)?;
        let t0 = path.times()[burn.min(path.flights())];
        let mid = 0.5 * (t0 + path.total_time());
        let mut rep = detect_crossings(&path, surface, domain.eps_geom());
        rep.events.retain(|e| e.time >= t0);
        let first_half = rep.events.iter().filter(|e| e.time < mid).count() as u64;
        Ok((rep, first_half, path.total_time() - t0, path.resample_count))
    })?;
    report.counters.resample_count = parts.iter().map(|p| p.3).sum();
    report.counters.tangential_count = parts.iter().map(|p| p.0.tangential_count).sum();
    let angles: Vec<f64> = parts.iter().flat_map(|p| p.0.events.iter().map(|e| e.angle())).collect();
    let count = angles.len();
    report.values.insert("crossings".into(), count as f64);
    let duration: f64 = parts.iter().map(|p| p.2).sum();
    let first: u64 = parts.iter().map(|p| p.1).sum();
    report.values.insert("rate_first_half".into(), 2.0 * first as f64 / duration);
    report.values.insert("rate_second_half".into(), 2.0 * (count as u64 - first) as f64 / duration);
    report.checks.push(Check::holds("crossing-count", count as f64, ">= 100", count >= 100));
    if count >= 100 {
        let cosine = ReflectionLaw::cosine(dim)?;
        report.tests.push(ks_test(&angles, |a| cosine.angular_cdf(a))?.named("crossing-angle-law"));
    }
    let mut first_report = parts.into_iter().next().map(|p| p.0).unwrap_or_else(CrossingReport::default);
    first_report.events.truncate(keep(cfg));
    out.add("crossings.csv", |b| first_report.write_csv(dim, b));
    Ok(())
}

fn unflagged_row_deviation(system: &KernelSystem, mesh: &PanelMesh) -> f64 {
    system.raw_row_sums.iter().zip(&mesh.panels).filter(|(_, p)| !p.flagged).map(|(s, _)| (s - 1.0).abs()).fold(0.0, f64::max)
}

fn kernel_solve(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    let domain = &prep.domain;
    let quadrature = cfg.params.quadrature.unwrap_or_else(|| Quadrature::default_for(domain));
    let mesh = build_mesh(domain, cfg.n as usize)?;
    let system = assemble_with(&mesh, &prep.law, domain, quadrature, false)?;
    let psi = system.invariant_density(cfg.params.tolerance.unwrap_or(1e-13))?;
    report.values.insert("panels".into(), mesh.len() as f64);
    report.values.insert("flagged_panels".into(), mesh.panels.iter().filter(|p| p.flagged).count() as f64);
    report.values.insert("iterations".into(), psi.iterations as f64);
    report.checks.push(Check::below("row-sum-deviation", unflagged_row_deviation(&system, &mesh), ROW_SUM_TOLERANCE));
    report.checks.push(Check::below("balance-residual", psi.residual, 1e-10));
    report.checks.push(Check::below("raw-balance-residual", system.raw_balance_residual(&psi.values), 2.0 * ROW_SUM_TOLERANCE));
    let n0 = cfg.params.doblin_steps.unwrap_or(3);
    report.checks.push(Check::above(format!("doblin-min-{n0}-step"), system.doblin_check(n0), 0.0));
    report.checks.push(Check::below("second-eigenvalue-modulus", system.second_eigenvalue_modulus(300), 1.0));
    report.checks.push(Check::above("min-density", psi.values.iter().copied().fold(f64::INFINITY, f64::min), 0.0));
    if prep.law.is_cosine() {
        let dev = psi.max_relative_deviation(&mesh, 1.0 / domain.boundary_measure());
        report.checks.push(Check::below("uniform-deviation", dev, cfg.params.uniform_tolerance.unwrap_or(1e-3)));
    }
    if let Some(steps) = cfg.params.walk_steps {
        let nb = bins(cfg);
        let (domain, law) = (&prep.domain, &prep.law);
        let parts = replicas(cfg, steps, |_, rng, share| {
            let mut walk = Walk::new(domain, law, random_start(domain, rng));
            walk.skip(burn_in(cfg), rng)?;
            let mut counts = vec![0u64; nb];
            for _ in 0..share {
                counts[domain.boundary_bin(&walk.advance(rng)?.position, nb)] += 1;
            }
            Ok(counts)
        })?;
        let counts = sum_counts(parts.into_iter(), nb);
        let masses: Vec<f64> = psi.values.iter().zip(&mesh.panels).map(|(v, p)| v * p.measure).collect();
        let probs = panel_bin_masses(domain, &mesh, &masses, nb);
        let tv = tv_distance(&BinnedMeasure::from_counts(&counts), &measure_of(&probs))?;
        report.checks.push(Check::below("walk-vs-kernel-tv", tv, tv_limit(0.02, &probs, steps)));
        out.add("walk_histogram.csv", |b| histogram_csv(b, &counts, &probs));
    }
    out.add("psi.csv", |b| psi.write_csv(&mesh, b));
    if cfg.params.dump_matrix == Some(true) {
        out.add("matrix.csv", |b| system.write_matrix_csv(b));
    }
    Ok(())
}

fn clt(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    let (domain, law) = (&prep.domain, &prep.law);
    let batches = cfg.params.batches.unwrap_or(DEFAULT_BATCHES);
    // one long chain: batch means need a single stationary series
    let mut rng = replica_rng(cfg.seed, 0);
    let mut walk = Walk::new(domain, law, random_start(domain, &mut rng));
    walk.skip(burn_in(cfg), &mut rng)?;
    let mut series = Vec::with_capacity(cfg.n as usize);
    for _ in 0..cfg.n {
        series.push(if domain.boundary_bin(&walk.advance(&mut rng)?.position, 2) == 0 { 1.0 } else { 0.0 });
    }
    report.counters.resample_count = walk.resample_count;
    let bm = batch_means(&series, batches)?;
    let sigma = bm.variance.sqrt();
    report.tests.push(bm.normality.clone().named("batch-means-normality").at_level(0.01));
    report.checks.push(Check::above("sigma", sigma, 0.0));
    report.values.insert("sigma".into(), sigma);
    let e = Estimate { estimate: bm.mean, stderr: (bm.variance / cfg.n as f64).sqrt(), n: cfg.n };
    if law.is_cosine() {
        report.tests.push(z_test("half-boundary-occupation", &e, 0.5, 3.0));
        report.estimates.push(NamedEstimate::new("half-boundary-occupation", &e, Some(0.5)));
    } else {
        report.estimates.push(NamedEstimate::new("half-boundary-occupation", &e, None));
    }
    let size = bm.batch_size;
    out.add("batches.csv", |b| {
        use std::io::Write;
        writeln!(b, "batch,mean,standardized")?;
        for (k, chunk) in series.chunks_exact(size).take(batches).enumerate() {
            let m = chunk.iter().sum::<f64>() / size as f64;
            writeln!(b, "{k},{m},{}", (m - bm.mean) * (size as f64 / bm.variance).sqrt())?;
        }
        Ok(())
    });
    Ok(())
}

/// Fixed start for decay runs: the given point, or one just past the first
/// vertex on polygons (a point of component 0 for other shapes).
fn decay_start(cfg: &ExperimentConfig, domain: &Domain) -> Result<BoundaryPoint> {
    if let Some(p) = &cfg.params.start {
        let p = crate::Vector::from_slice(p).expect("checked by prepare");
        let bp = domain.locate(p).map_err(|e| super::ExperimentError::config("params.start", e.to_string()))?;
        if !bp.is_regular {
            return Err(super::ExperimentError::config("params.start", "start must be a regular boundary point"));
        }
        return Ok(bp);
    }
    match domain.kind() {
        ShapeKind::Polygon(_) => Ok(domain.point_at_arc(0, 1e-3 * domain.component_measures()[0])?),
        _ if domain.dim() == 2 => Ok(domain.point_at_arc(0, 0.0)?),
        _ => Ok(random_start(domain, &mut replica_rng(cfg.seed, u64::MAX))),
    }
}

fn ergodicity_decay(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    let (domain, law, nb) = (&prep.domain, &prep.law, bins(cfg));
    let times = cfg.params.times.clone().unwrap_or_else(|| vec![1, 2, 4, 8, 16]);
    let start = decay_start(cfg, domain)?;
    let parts = replicas(cfg, cfg.n, |_, rng, share| {
        let mut counts = vec![vec![0u64; nb]; times.len()];
        let mut resamples = 0;
        for _ in 0..share {
            let mut walk = Walk::new(domain, law, start);
            let mut step = 0;
            for (k, &t) in times.iter().enumerate() {
                walk.skip(t - step, rng)?;
                step = t;
                counts[k][domain.boundary_bin(&walk.state.position, nb)] += 1;
            }
            resamples += walk.resample_count;
        }
        Ok((counts, resamples))
    })?;
    report.counters.resample_count = parts.iter().map(|p| p.1).sum();
    let reference = reference_probabilities(cfg, prep, nb)?.unwrap_or_else(|| uniform_probs(nb));
    let target = measure_of(&reference);
    let mut tvs = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let counts = sum_counts(parts.iter().map(|p| p.0[k].clone()), nb);
        tvs.push(tv_distance(&BinnedMeasure::from_counts(&counts), &target)?);
    }
    let floor = noise_floor(&reference, cfg.n);
    report.values.insert("noise_floor".into(), floor);
    let predicted = if domain.dim() == 2 { Some(predicted_decay(cfg, prep, &start, &times, &reference)?) } else { None };
    for (k, &t) in times.iter().enumerate() {
        report.values.insert(format!("tv_{t}"), tvs[k]);
        if let Some(p) = &predicted {
            report.values.insert(format!("kernel_tv_{t}"), p[k]);
        }
    }
    let increases = tvs.windows(2).filter(|w| w[1] >= w[0]).count();
    report.checks.push(Check::holds("strictly-decreasing", increases as f64, "== 0 increases", increases == 0));
    let xs: Vec<f64> = times.iter().map(|&t| t as f64).collect();
    let slope = log_linear_slope(&xs, &tvs);
    report.values.insert("log_linear_slope".into(), slope);
    report.checks.push(Check::below("log-linear-slope", slope, 0.0));
    out.add("decay.csv", |b| {
        use std::io::Write;
        writeln!(b, "n,tv,kernel_tv,noise_floor")?;
        for (k, &t) in times.iter().enumerate() {
            let p = predicted.as_ref().map_or(f64::NAN, |p| p[k]);
            writeln!(b, "{t},{},{p},{floor}", tvs[k])?;
        }
        Ok(())
    });
    Ok(())
}

/// Binned distance to `reference` of the kernel chain started at the panel nearest `start`.
fn predicted_decay(cfg: &ExperimentConfig, prep: &Prepared, start: &BoundaryPoint, times: &[u64], reference: &[f64]) -> Result<Vec<f64>> {
    let quadrature = cfg.params.quadrature.unwrap_or_else(|| Quadrature::default_for(&prep.domain));
    let mesh = build_mesh(&prep.domain, cfg.params.panels.unwrap_or(400))?;
    let system = assemble_with(&mesh, &prep.law, &prep.domain, quadrature, false)?;
    let nearest = (0..mesh.len())
        .min_by(|&a, &b| {
            let d = |i: usize| mesh.panels[i].midpoint.position.distance(start.position);
            d(a).total_cmp(&d(b))
        })
        .unwrap_or(0);
    let mut p = vec![0.0; mesh.len()];
    p[nearest] = 1.0;
    let mut step = 0;
    let nb = reference.len();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        for _ in step..t {
            p = system.left_multiply(&p);
        }
        step = t;
        let binned = panel_bin_masses(&prep.domain, &mesh, &p, nb);
        out.push(tv_distance(&measure_of(&binned), &measure_of(reference))?);
    }
    Ok(out)
}

fn reversal(cfg: &ExperimentConfig, prep: &Prepared, report: &mut RunReport, out: &mut Outputs) -> Result<()> {
    let (domain, law, dim) = (&prep.domain, &prep.law, prep.domain.dim());
    let nb = cfg.params.bins.unwrap_or(10);
    let parts = replicas(cfg, cfg.n, |_, rng, share| {
        let mut walk = Walk::new(domain, law, random_start(domain, rng));
        walk.skip(burn_in(cfg), rng)?;
        let mut pairs = vec![vec![0.0; nb]; nb];
        let mut dirs = vec![0u64; PRODUCT_BINS];
        for k in 0..share {
            let a = walk.state.position;
            let b = walk.advance(rng)?.position;
            if k % 2 == 0 {
                pairs[domain.boundary_bin(&a, nb)][domain.boundary_bin(&b, nb)] += 1.0;
            }
            let v = crate::UnitVector::new(b.position - a.position).expect("distinct hit points");
            dirs[direction_bin(v, dim, PRODUCT_BINS)] += 1;
        }
        Ok((pairs, dirs, walk.resample_count))
    })?;
    report.counters.resample_count = parts.iter().map(|p| p.2).sum();
    let mut pairs = vec![vec![0.0; nb]; nb];
    for p in &parts {
        for (i, row) in p.0.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                pairs[i][j] += c;
            }
        }
    }
    let dirs = sum_counts(parts.iter().map(|p| p.1.clone()), PRODUCT_BINS);
    let mut flip = vec![vec![0.0; PRODUCT_BINS]; PRODUCT_BINS];
    for (b, &c) in dirs.iter().enumerate() {
        flip[b][antipodal_bin(b, dim, PRODUCT_BINS)] = c as f64;
    }
    let alpha = bonferroni(ALPHA, 2);
    report.tests.push(symmetry_test(&pairs)?.named("pair-swap-symmetry").at_level(alpha));
    report.tests.push(symmetry_test(&flip)?.named("velocity-sign-flip").at_level(alpha));
    out.add("pairs.csv", |b| {
        use std::io::Write;
        writeln!(b, "from,to,count")?;
        for (i, row) in pairs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                writeln!(b, "{i},{j},{c}")?;
            }
        }
        Ok(())
    });
    out.add("directions.csv", |b| {
        use std::io::Write;
        writeln!(b, "bin,count")?;
        for (i, c) in dirs.iter().enumerate() {
            writeln!(b, "{i},{c}")?;
        }
        Ok(())
    });
    Ok(())
}
