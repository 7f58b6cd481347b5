//! Goodness-of-fit tests, binned measures and batch-means variance estimates.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

/// Default test level.
pub const ALPHA: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("expected count {expected:.2} in some bin is below the minimum {minimum}")]
    InsufficientCounts { expected: f64, minimum: f64 },
    #[error("series of length {len} is too short; need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("bin counts differ: {0} vs {1}")]
    BinMismatch(usize, usize),
    #[error("empty sample")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, StatsError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: u64,
    pub pass: bool,
}

impl TestResult {
    pub fn new(test: impl Into<String>, statistic: f64, p_value: f64, n: u64, alpha: f64) -> Self {
        let p_value = if p_value.is_nan() { 0.0 } else { p_value.clamp(0.0, 1.0) };
        TestResult { test: test.into(), statistic, p_value, n, pass: p_value > alpha }
    }

    /// Re-judges the result at a different level.
    pub fn at_level(mut self, alpha: f64) -> Self {
        self.pass = self.p_value > alpha;
        self
    }

    pub fn named(mut self, test: impl Into<String>) -> Self {
        self.test = test.into();
        self
    }
}

/// Counts or time-weights over bins of equal target measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedMeasure {
    pub weights: Vec<f64>,
}

impl BinnedMeasure {
    pub fn zeros(bins: usize) -> Self {
        BinnedMeasure { weights: vec![0.0; bins] }
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        BinnedMeasure { weights: counts.iter().map(|&c| c as f64).collect() }
    }

    pub fn uniform(bins: usize) -> Self {
        BinnedMeasure { weights: vec![1.0 / bins as f64; bins] }
    }

    pub fn bins(&self) -> usize {
        self.weights.len()
    }

    pub fn add(&mut self, bin: usize, w: f64) {
        self.weights[bin] += w;
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn normalized(&self) -> Vec<f64> {
        let t = self.total();
        self.weights.iter().map(|w| w / t).collect()
    }

    /// Merges another measure with the same binning.
    pub fn merge(&mut self, other: &BinnedMeasure) -> Result<()> {
        if other.bins() != self.bins() {
            return Err(StatsError::BinMismatch(self.bins(), other.bins()));
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        Ok(())
    }
}

pub fn chi_square_sf(statistic: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("positive degrees of freedom").sf(statistic)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Pearson chi-square against the uniform null over the bins.
pub fn chi_square_uniform(m: &BinnedMeasure) -> Result<TestResult> {
    let k = m.bins();
    chi_square_expected(m, &vec![1.0 / k as f64; k])
}

/// Pearson chi-square against arbitrary bin probabilities.
pub fn chi_square_expected(m: &BinnedMeasure, probs: &[f64]) -> Result<TestResult> {
    if probs.len() != m.bins() {
        return Err(StatsError::BinMismatch(m.bins(), probs.len()));
    }
    let n = m.total();
    let min_expected = probs.iter().map(|p| p * n).fold(f64::INFINITY, f64::min);
    if !(min_expected >= 20.0) {
        return Err(StatsError::InsufficientCounts { expected: min_expected, minimum: 20.0 });
    }
    let stat: f64 = m.weights.iter().zip(probs).map(|(o, p)| (o - p * n).powi(2) / (p * n)).sum();
    let df = (m.bins() - 1) as f64;
    Ok(TestResult::new("chi-square", stat, chi_square_sf(stat, df), n as u64, ALPHA))
}

/// Chi-square test of independence on a contingency table.
pub fn chi_square_independence(table: &[Vec<f64>]) -> Result<TestResult> {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols = table.first().map_or(0, Vec::len);
    if cols == 0 || table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::BinMismatch(cols, table.iter().map(Vec::len).min().unwrap_or(0)));
    }
    let col_sums: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let n: f64 = rows.iter().sum();
    let mut stat = 0.0;
    let mut min_expected = f64::INFINITY;
    for (i, r) in table.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = rows[i] * col_sums[j] / n;
            min_expected = min_expected.min(e);
            stat += (o - e).powi(2) / e;
        }
    }
    if !(min_expected >= 5.0) {
        return Err(StatsError::InsufficientCounts { expected: min_expected, minimum: 5.0 });
    }
    let df = ((table.len() - 1) * (cols - 1)) as f64;
    Ok(TestResult::new("chi-square-independence", stat, chi_square_sf(stat, df), n as u64, ALPHA))
}

/// Bowker's test that a square table is symmetric under transposition.
pub fn symmetry_test(table: &[Vec<f64>]) -> Result<TestResult> {
    let k = table.len();
    if table.iter().any(|r| r.len() != k) {
        return Err(StatsError::BinMismatch(k, table.iter().map(Vec::len).min().unwrap_or(0)));
    }
    let mut stat = 0.0;
    let mut df = 0usize;
    let mut n = 0.0;
    for i in 0..k {
        for j in 0..k {
            n += table[i][j];
            if j > i {
                let s = table[i][j] + table[j][i];
                if s > 0.0 {
                    stat += (table[i][j] - table[j][i]).powi(2) / s;
                    df += 1;
                }
            }
        }
    }
    Ok(TestResult::new("bowker-symmetry", stat, chi_square_sf(stat, df as f64), n as u64, ALPHA))
}

/// Asymptotic Kolmogorov tail probability P(K > lambda).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample Kolmogorov–Smirnov test.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(TestResult::new("ks", d, ks_p_value(d, n), s.len() as u64, ALPHA))
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let n_eff = n * m / (n + m);
    Ok(TestResult::new("ks-two-sample", d, ks_p_value(d, n_eff), (a.len() + b.len()) as u64, ALPHA))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMeans {
    pub mean: f64,
    /// Estimate of the asymptotic variance of sqrt(n) times the mean.
    pub variance: f64,
    pub batch_size: usize,
    pub normality: TestResult,
}

pub fn batch_means(series: &[f64], n_batches: usize) -> Result<BatchMeans> {
    let needed = 100 * n_batches.max(2);
    if series.len() < needed {
        return Err(StatsError::SeriesTooShort { len: series.len(), needed });
    }
    let b = series.len() / n_batches;
    let means: Vec<f64> = series.chunks_exact(b).take(n_batches).map(|c| c.iter().sum::<f64>() / b as f64).collect();
    let mean = means.iter().sum::<f64>() / n_batches as f64;
    let var_batch = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    let sd = var_batch.sqrt();
    let normality = if sd > 0.0 {
        let z: Vec<f64> = means.iter().map(|m| (m - mean) / sd).collect();
        ks_test(&z, normal_cdf)?.named("batch-means-normality")
    } else {
        TestResult::new("batch-means-normality", 0.0, 1.0, n_batches as u64, ALPHA)
    };
    Ok(BatchMeans { mean, variance: b as f64 * var_batch, batch_size: b, normality })
}

/// Total variation distance between two binned measures after normalization.
pub fn tv_distance(a: &BinnedMeasure, b: &BinnedMeasure) -> Result<f64> {
    if a.bins() != b.bins() {
        return Err(StatsError::BinMismatch(a.bins(), b.bins()));
    }
    let (pa, pb) = (a.normalized(), b.normalized());
    Ok((0.5 * pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>()).min(1.0))
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn bonferroni(alpha: f64, tests: usize) -> f64 {
    alpha / tests.max(1) as f64
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n: u64,
}

impl Estimate {
    pub fn from_accumulator(acc: &Accumulator) -> Self {
        Estimate { estimate: acc.mean(), stderr: acc.stderr(), n: acc.n }
    }

    pub fn proportion(successes: u64, n: u64) -> Self {
        let p = successes as f64 / n as f64;
        Estimate { estimate: p, stderr: (p * (1.0 - p) / n as f64).sqrt(), n }
    }

    /// Distance to `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.estimate - target) / self.stderr
    }

    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.stderr
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan's parallel combination.
    pub fn merge(&mut self, o: &Accumulator) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 { 0.0 } else { self.m2 / (self.n - 1) as f64 }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let mut acc = Accumulator::default();
    xs.iter().for_each(|&x| acc.push(x));
    (acc.mean(), acc.stderr())
}

/// Least-squares slope of ln(y) against x.
pub fn log_linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
