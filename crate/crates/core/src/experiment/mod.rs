//! Named, seeded experiments with JSON reports and CSV outputs.

mod config;
mod runners;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    build_region, DomainRef, ExperimentConfig, ExperimentName, Params, Prepared, RegionSpec, SurfaceSpec, DEFAULT_BATCHES,
    DEFAULT_BINS, DEFAULT_BURN_IN, DEFAULT_KEEP, DEFAULT_REPLICAS,
};

use crate::billiard::BilliardError;
use crate::chords::ChordError;
use crate::geometry::GeometryError;
use crate::kernel::KernelError;
use crate::reflection::ReflectionError;
use crate::stats::{normal_cdf, Estimate, StatsError, TestResult};
use crate::walk::WalkError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Billiard(#[from] BilliardError),
    #[error(transparent)]
    Chord(#[from] ChordError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ExperimentError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        ExperimentError::Config { field: field.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// A deterministic pass/fail assertion on a computed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<"`, `">"` or `"<="`-style description of the requirement.
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, requirement: format!("< {limit}"), pass: value < limit }
    }

    pub fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, requirement: format!("> {limit}"), pass: value > limit }
    }

    pub fn holds(name: impl Into<String>, value: f64, requirement: impl Into<String>, pass: bool) -> Self {
        Check { name: name.into(), value, requirement: requirement.into(), pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

impl NamedEstimate {
    pub fn new(name: impl Into<String>, e: &Estimate, target: Option<f64>) -> Self {
        NamedEstimate { name: name.into(), estimate: e.estimate, stderr: e.stderr, n: e.n, target, z: target.map(|t| e.z_score(t)) }
    }
}

/// Two-sided z test of an estimate against its target; passes within `k` standard errors.
pub fn z_test(name: impl Into<String>, e: &Estimate, target: f64, k: f64) -> TestResult {
    let z = e.z_score(target);
    let p = 2.0 * (1.0 - normal_cdf(z.abs()));
    let mut t = TestResult::new(name, z, p.clamp(0.0, 1.0), e.n, 2.0 * (1.0 - normal_cdf(k)));
    t.pass = z.abs() <= k;
    t
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub resample_count: u64,
    pub tangential_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub tests: Vec<TestResult>,
    pub checks: Vec<Check>,
    pub estimates: Vec<NamedEstimate>,
    pub values: BTreeMap<String, f64>,
    pub counters: Counters,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
    pub passed: bool,
}

impl RunReport {
    fn new(config: &ExperimentConfig) -> Self {
        RunReport {
            config: config.clone(),
            tests: Vec::new(),
            checks: Vec::new(),
            estimates: Vec::new(),
            values: BTreeMap::new(),
            counters: Counters::default(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
            passed: false,
        }
    }

    pub fn test(&self, name: &str) -> Option<&TestResult> {
        self.tests.iter().find(|t| t.test == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<&NamedEstimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    /// Names of the failed tests and checks.
    pub fn failures(&self) -> Vec<String> {
        let tests = self.tests.iter().filter(|t| !t.pass).map(|t| t.test.clone());
        tests.chain(self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone())).collect()
    }
}

/// CSV files produced by a run, kept in memory until the run finishes.
#[derive(Debug, Default)]
pub(crate) struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub(crate) fn add(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) {
        let mut buf = Vec::new();
        write(&mut buf).expect("writing to memory");
        self.files.push((name.to_string(), buf));
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })
}

/// Runs the configured experiment, writes its CSVs and `report.json` into
/// the output directory, and returns the report. A failing statistical test
/// is not an error: the report records it and `passed` is false.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let started = Instant::now();
    let prepared = config.prepare()?;
    let mut report = RunReport::new(config);
    let mut outputs = Outputs::default();
    runners::run(config, &prepared, &mut report, &mut outputs)?;
    report.passed = report.tests.iter().all(|t| t.pass) && report.checks.iter().all(|c| c.pass);

    let dir = config.output_dir();
    std::fs::create_dir_all(&dir).map_err(|source| ExperimentError::Io { path: dir.clone(), source })?;
    for (name, bytes) in &outputs.files {
        write_file(&dir.join(name), bytes)?;
        report.outputs.push(name.clone());
    }
    report.outputs.push("report.json".into());
    report.wall_clock_seconds = started.elapsed().as_secs_f64();
    let json = serde_json::to_vec_pretty(&report).expect("report serializes");
    write_file(&dir.join("report.json"), &json)?;
    Ok(report)
}

/// Checks a configuration without running it.
pub fn validate(config: &ExperimentConfig) -> Result<Prepared> {
    config.prepare()
}
