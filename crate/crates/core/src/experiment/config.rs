//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};
use crate::billiard::{InternalSurface, Region, RegionPart};
use crate::geometry::{Domain, DomainSpec, BUILTIN_DOMAINS};
use crate::kernel::Quadrature;
use crate::reflection::{LawSpec, ReflectionLaw};
use crate::vector::{Point, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    WalkStationarity,
    BilliardStationarity,
    MeanChord,
    Bertrand,
    InducedChords,
    Crossings,
    KernelSolve,
    Clt,
    ErgodicityDecay,
    Reversal,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 10] = [
        ExperimentName::WalkStationarity,
        ExperimentName::BilliardStationarity,
        ExperimentName::MeanChord,
        ExperimentName::Bertrand,
        ExperimentName::InducedChords,
        ExperimentName::Crossings,
        ExperimentName::KernelSolve,
        ExperimentName::Clt,
        ExperimentName::ErgodicityDecay,
        ExperimentName::Reversal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::WalkStationarity => "walk-stationarity",
            ExperimentName::BilliardStationarity => "billiard-stationarity",
            ExperimentName::MeanChord => "mean-chord",
            ExperimentName::Bertrand => "bertrand",
            ExperimentName::InducedChords => "induced-chords",
            ExperimentName::Crossings => "crossings",
            ExperimentName::KernelSolve => "kernel-solve",
            ExperimentName::Clt => "clt",
            ExperimentName::ErgodicityDecay => "ergodicity-decay",
            ExperimentName::Reversal => "reversal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == s)
    }

    /// Smallest admissible `n` given the parameters.
    pub fn minimum_n(self, params: &Params) -> u64 {
        let bins = params.bins.unwrap_or(DEFAULT_BINS) as u64;
        match self {
            ExperimentName::WalkStationarity | ExperimentName::ErgodicityDecay => 20 * bins,
            ExperimentName::BilliardStationarity => 10_000,
            ExperimentName::MeanChord | ExperimentName::Bertrand | ExperimentName::InducedChords => 100,
            ExperimentName::Crossings | ExperimentName::Reversal => 1_000,
            ExperimentName::KernelSolve => 4,
            ExperimentName::Clt => 100 * params.batches.unwrap_or(DEFAULT_BATCHES) as u64,
        }
    }
}

impl std::fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_BINS: usize = 50;
pub const DEFAULT_BATCHES: usize = 200;
pub const DEFAULT_BURN_IN: u64 = 10_000;
pub const DEFAULT_REPLICAS: usize = 8;
pub const DEFAULT_KEEP: usize = 10_000;

/// A built-in name, a path to a domain file, or an inline description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainRef {
    Name(String),
    Inline(DomainSpec),
}

impl DomainRef {
    /// Relative paths are taken from `base`.
    pub fn resolve(&self, base: &Path) -> Result<Domain> {
        match self {
            DomainRef::Inline(spec) => Ok(spec.build()?),
            DomainRef::Name(name) if BUILTIN_DOMAINS.contains(&name.as_str()) => Ok(Domain::builtin(name)?),
            DomainRef::Name(path) => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| ExperimentError::config("domain", format!("cannot read {}: {e}", path.display())))?;
                let spec = DomainSpec::from_json(&text)
                    .map_err(|e| ExperimentError::config("domain", format!("{}: {e}", path.display())))?;
                Ok(spec.build()?)
            }
        }
    }
}

fn point(c: &[f64], field: &str) -> Result<Point> {
    Vector::from_slice(c).ok_or_else(|| ExperimentError::config(field, "points need 2 or 3 coordinates"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SurfaceSpec {
    Segment { a: Vec<f64>, b: Vec<f64> },
    Polyline { points: Vec<Vec<f64>> },
    Triangles { triangles: Vec<[Vec<f64>; 3]> },
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<InternalSurface> {
        let f = "params.surface";
        let s = match self {
            SurfaceSpec::Segment { a, b } => InternalSurface::segment(point(a, f)?, point(b, f)?),
            SurfaceSpec::Polyline { points } => {
                InternalSurface::polyline(&points.iter().map(|p| point(p, f)).collect::<Result<Vec<_>>>()?)
            }
            SurfaceSpec::Triangles { triangles } => InternalSurface::triangles(
                &triangles
                    .iter()
                    .map(|t| Ok([point(&t[0], f)?, point(&t[1], f)?, point(&t[2], f)?]))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        s.map_err(|e| ExperimentError::config(f, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

pub fn build_region(parts: &[RegionSpec]) -> Result<Region> {
    let f = "params.region";
    let parts = parts
        .iter()
        .map(|p| {
            Ok(match p {
                RegionSpec::Ball { center, radius } => RegionPart::Ball { center: point(center, f)?, radius: *radius },
                RegionSpec::Box { lo, hi } => RegionPart::Box { lo: point(lo, f)?, hi: point(hi, f)? },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Region::Union(parts))
}

/// Experiment-specific settings; each experiment reads only the ones it uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Equal-measure boundary bins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Steps (or flights) discarded per replica before recording.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    /// Bertrand construction 1, 2 or 3; all three when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdomain: Option<DomainRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Vec<RegionSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<Quadrature>,
    /// Power-iteration tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Allowed relative deviation of a cosine-law density from uniform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doblin_steps: Option<usize>,
    /// Walk steps for the Monte Carlo cross-check of a kernel solve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_matrix: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
    /// Step counts at which the ensemble is histogrammed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<u64>>,
    /// Fixed starting point, moved onto the boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    /// Panels used when a kernel solution serves as reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panels: Option<usize>,
    /// Rows kept in trajectory-like CSV outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keep: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    pub domain: DomainRef,
    #[serde(default)]
    pub law: LawSpec,
    pub n: u64,
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default)]
    pub params: Params,
    /// Directory against which relative paths resolve; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

/// Everything a run needs, built and checked.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub domain: Domain,
    pub law: ReflectionLaw,
    pub subdomain: Option<Domain>,
    pub surface: Option<InternalSurface>,
    pub region: Option<Region>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ExperimentError::config("<document>", e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| ExperimentError::config("<document>", "expected a JSON object"))?;
        match obj.get("experiment") {
            None => return Err(ExperimentError::config("experiment", "missing")),
            Some(serde_json::Value::String(s)) if ExperimentName::parse(s).is_none() => {
                let names: Vec<&str> = ExperimentName::ALL.iter().map(|e| e.as_str()).collect();
                return Err(ExperimentError::config("experiment", format!("unknown experiment '{s}' (expected one of {})", names.join(", "))));
            }
            _ => {}
        }
        serde_json::from_value(value).map_err(|e| {
            let msg = e.to_string();
            let field = field_in_message(&msg).unwrap_or_else(|| "<document>".into());
            ExperimentError::config(field, msg)
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn replicas(&self) -> usize {
        self.replicas.unwrap_or(DEFAULT_REPLICAS).max(1)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.output)
    }

    /// Builds the domain, law and experiment inputs and checks them against
    /// the experiment's requirements without running anything.
    pub fn prepare(&self) -> Result<Prepared> {
        let domain = self.domain.resolve(&self.base_dir)?;
        let dim = domain.dim();
        let law = self.law.build(dim).map_err(|e| ExperimentError::config("law", e.to_string()))?;
        let p = &self.params;
        let min = self.experiment.minimum_n(p);
        if self.n < min {
            return Err(ExperimentError::config("n", format!("{} needs n >= {min}, got {}", self.experiment, self.n)));
        }
        if self.replicas == Some(0) {
            return Err(ExperimentError::config("replicas", "must be at least 1"));
        }
        if p.bins == Some(0) {
            return Err(ExperimentError::config("params.bins", "must be at least 1"));
        }
        if matches!(p.tolerance, Some(t) if t.is_nan() || t <= 0.0) {
            return Err(ExperimentError::config("params.tolerance", "must be positive"));
        }
        if let Some(s) = &p.start {
            if s.len() != dim {
                return Err(ExperimentError::config("params.start", format!("expected {dim} coordinates")));
            }
        }
        let cosine_only = matches!(self.experiment, ExperimentName::MeanChord | ExperimentName::InducedChords | ExperimentName::Bertrand);
        if cosine_only && !law.is_cosine() {
            return Err(ExperimentError::config("law", format!("{} is defined for the cosine law", self.experiment)));
        }
        let mut prepared = Prepared { domain, law, subdomain: None, surface: None, region: None };
        match self.experiment {
            ExperimentName::Bertrand => {
                if let Some(m) = p.method {
                    if !(1..=3).contains(&m) {
                        return Err(ExperimentError::config("params.method", format!("must be 1, 2 or 3, got {m}")));
                    }
                }
                let d = &prepared.domain;
                let unit = match d.kind() {
                    crate::geometry::ShapeKind::Disk(b) => b.radius == 1.0,
                    _ => false,
                };
                if !unit {
                    return Err(ExperimentError::config("domain", "bertrand runs on a unit disk"));
                }
            }
            ExperimentName::InducedChords => {
                let sub = p.subdomain.as_ref().ok_or_else(|| ExperimentError::config("params.subdomain", "required"))?;
                let sub = sub.resolve(&self.base_dir)?;
                if sub.dim() != dim {
                    return Err(ExperimentError::config("params.subdomain", "dimension differs from the domain"));
                }
                crate::chords::check_containment(&prepared.domain, &sub, &mut crate::rng::replica_rng(self.seed, u64::MAX))
                    .map_err(|e| ExperimentError::config("params.subdomain", e.to_string()))?;
                prepared.subdomain = Some(sub);
            }
            ExperimentName::Crossings => {
                let s = p.surface.as_ref().ok_or_else(|| ExperimentError::config("params.surface", "required"))?.build()?;
                s.validate(&prepared.domain).map_err(|e| ExperimentError::config("params.surface", e.to_string()))?;
                prepared.surface = Some(s);
            }
            ExperimentName::ErgodicityDecay => {
                if dim == 3 && !prepared.law.is_cosine() {
                    return Err(ExperimentError::config("law", "ergodicity-decay in 3D needs the cosine law"));
                }
                let times = p.times.clone().unwrap_or_else(|| vec![1, 2, 4, 8, 16]);
                if times.len() < 2 || times[0] == 0 || times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(ExperimentError::config("params.times", "need at least two strictly increasing positive step counts"));
                }
            }
            ExperimentName::Clt if p.batches == Some(0) => {
                return Err(ExperimentError::config("params.batches", "must be at least 1"));
            }
            _ => {}
        }
        if let Some(r) = &p.region {
            let region = build_region(r)?;
            if let Region::Union(parts) = &region {
                if parts.iter().any(|part| matches!(part, RegionPart::Ball { radius, .. } if *radius <= 0.0)) {
                    return Err(ExperimentError::config("params.region", "ball radius must be positive"));
                }
            }
            prepared.region = Some(region);
        }
        Ok(prepared)
    }
}

/// serde names the offending field in backticks.
fn field_in_message(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let end = start + msg[start..].find('`')?;
    Some(msg[start..end].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> String {
        format!(r#"{{"experiment": "mean-chord", "domain": "unit-disk", "n": 1000, "seed": 1{extra}}}"#)
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_json(&cfg("")).unwrap();
        assert_eq!(c.experiment, ExperimentName::MeanChord);
        assert_eq!(c.law, LawSpec::default());
        assert_eq!(c.replicas(), DEFAULT_REPLICAS);
        assert!(c.prepare().is_ok());
    }

    #[test]
    fn unknown_experiment_names_the_field() {
        let e = ExperimentConfig::from_json(r#"{"experiment": "nope", "domain": "unit-disk", "n": 10, "seed": 1}"#).unwrap_err();
        match e {
            ExperimentError::Config { field, message } => {
                assert_eq!(field, "experiment");
                assert!(message.contains("nope") && message.contains("mean-chord"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_missing_fields_are_reported() {
        let e = ExperimentConfig::from_json(&cfg(r#", "sede": 3"#)).unwrap_err();
        assert!(matches!(e, ExperimentError::Config { ref field, .. } if field == "sede"), "{e:?}");
        let e = ExperimentConfig::from_json(r#"{"experiment": "clt", "domain": "unit-disk", "seed": 1}"#).unwrap_err();
        assert!(matches!(e, ExperimentError::Config { ref field, .. } if field == "n"), "{e:?}");
        let e = ExperimentConfig::from_json(&cfg(r#", "params": {"bogus": 1}"#)).unwrap_err();
        assert!(matches!(e, ExperimentError::Config { ref field, .. } if field == "bogus"), "{e:?}");
    }

    #[test]
    fn semantic_checks() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "clt", "domain": "unit-disk", "n": 100, "seed": 1}"#).unwrap();
        assert!(matches!(c.prepare(), Err(ExperimentError::Config { ref field, .. }) if field == "n"));
        let c = ExperimentConfig::from_json(&cfg(r#", "law": {"law": "uniform"}"#)).unwrap();
        assert!(matches!(c.prepare(), Err(ExperimentError::Config { ref field, .. }) if field == "law"));
        let c = ExperimentConfig::from_json(&cfg(r#", "law": {"law": "spiky"}"#)).unwrap();
        assert!(matches!(c.prepare(), Err(ExperimentError::Config { ref field, .. }) if field == "law"));
        let c = ExperimentConfig::from_json(r#"{"experiment": "crossings", "domain": "unit-disk", "n": 1000, "seed": 1}"#).unwrap();
        assert!(matches!(c.prepare(), Err(ExperimentError::Config { ref field, .. }) if field == "params.surface"));
        let c = ExperimentConfig::from_json(
            r#"{"experiment": "crossings", "domain": "unit-disk", "n": 1000, "seed": 1,
                "params": {"surface": {"type": "segment", "a": [0, -2], "b": [0, 0.5]}}}"#,
        )
        .unwrap();
        assert!(matches!(c.prepare(), Err(ExperimentError::Config { ref field, .. }) if field == "params.surface"));
        let c = ExperimentConfig::from_json(r#"{"experiment": "bertrand", "domain": "unit-square", "n": 1000, "seed": 1}"#).unwrap();
        assert!(matches!(c.prepare(), Err(ExperimentError::Config { ref field, .. }) if field == "domain"));
    }

    #[test]
    fn inline_domains_and_geometry_errors() {
        let c = ExperimentConfig::from_json(&cfg("").replace(
            r#""unit-disk""#,
            r#"{"type": "polygon2d", "components": [[[0, 0], [1, 1], [1, 0], [0, 1]]]}"#,
        ))
        .unwrap();
        assert!(matches!(c.prepare(), Err(ExperimentError::Geometry(_))));
        let c = ExperimentConfig::from_json(&cfg("").replace(r#""unit-disk""#, r#"{"type": "disk", "center": [0, 0], "radius": 2}"#)).unwrap();
        assert!((c.prepare().unwrap().domain.boundary_measure() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn induced_chords_checks_containment() {
        let bad = r#"{"experiment": "induced-chords", "domain": "unit-disk", "n": 1000, "seed": 1,
                      "params": {"subdomain": {"type": "disk", "center": [0.5, 0], "radius": 1}}}"#;
        let e = ExperimentConfig::from_json(bad).unwrap().prepare().unwrap_err();
        assert!(matches!(e, ExperimentError::Config { ref field, .. } if field == "params.subdomain"));
        let good = bad.replace(r#""radius": 1}"#, r#""radius": 0.25}"#);
        assert!(ExperimentConfig::from_json(&good).unwrap().prepare().unwrap().subdomain.is_some());
    }

    #[test]
    fn config_roundtrip() {
        let c = ExperimentConfig::from_json(&cfg(r#", "params": {"bins": 20, "region": [{"type": "ball", "center": [0, 0], "radius": 0.5}]}"#)).unwrap();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
