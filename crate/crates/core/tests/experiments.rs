use billiards_core::experiment::{run_experiment, validate, ExperimentConfig, ExperimentError, ExperimentName, RunReport};

fn config(json: &str, dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(json).unwrap();
    cfg.base_dir = dir.to_path_buf();
    cfg
}

fn run(json: &str) -> RunReport {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&config(json, dir.path())).unwrap()
}

#[test]
fn every_experiment_runs_and_declares_its_outputs() {
    let cases = [
        (r#"{"experiment": "walk-stationarity", "domain": "unit-square", "n": 50000, "seed": 1}"#, vec!["boundary-uniformity"], vec!["histogram.csv", "walk.csv"]),
        (r#"{"experiment": "billiard-stationarity", "domain": "unit-disk", "n": 50000, "seed": 2}"#, vec!["position-direction-independence", "occupation-fraction"], vec!["samples.csv", "flights.csv"]),
        (r#"{"experiment": "mean-chord", "domain": "unit-cube", "n": 20000, "seed": 3}"#, vec!["mean-chord"], vec!["chords.csv"]),
        (r#"{"experiment": "bertrand", "domain": "unit-disk", "n": 20000, "seed": 4}"#, vec!["bertrand-1", "bertrand-2", "bertrand-3"], vec!["bertrand.csv"]),
        (
            r#"{"experiment": "induced-chords", "domain": "annulus-1-2", "n": 20000, "seed": 5,
                "params": {"subdomain": {"type": "disk", "center": [1.5, 0], "radius": 0.4}}}"#,
            vec!["mean-iota", "hit-probability"],
            vec!["pieces.csv"],
        ),
        (
            r#"{"experiment": "crossings", "domain": "unit-cube", "n": 20000, "seed": 6,
                "params": {"surface": {"type": "triangles", "triangles": [[[0.1, 0.1, 0.5], [0.9, 0.1, 0.5], [0.1, 0.9, 0.5]]]}}}"#,
            vec!["crossing-angle-law"],
            vec!["crossings.csv"],
        ),
        (r#"{"experiment": "kernel-solve", "domain": "unit-cube", "n": 200, "seed": 7}"#, vec![], vec!["psi.csv"]),
        (r#"{"experiment": "clt", "domain": "ellipse-2x1", "n": 100000, "seed": 8, "params": {"batches": 100}}"#, vec!["batch-means-normality"], vec!["batches.csv"]),
        (r#"{"experiment": "ergodicity-decay", "domain": "unit-square", "n": 20000, "seed": 9, "params": {"times": [1, 2, 3]}}"#, vec![], vec!["decay.csv"]),
        (r#"{"experiment": "reversal", "domain": "unit-sphere", "n": 50000, "seed": 10}"#, vec!["pair-swap-symmetry", "velocity-sign-flip"], vec!["pairs.csv", "directions.csv"]),
    ];
    assert_eq!(cases.len(), ExperimentName::ALL.len());
    for (json, tests, files) in cases {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(json, dir.path());
        let report = run_experiment(&cfg).unwrap();
        for t in tests {
            assert!(report.test(t).is_some(), "{}: missing test {t}", cfg.experiment);
        }
        for f in files.iter().chain(&["report.json"]) {
            assert!(report.outputs.iter().any(|o| o == f), "{}: missing output {f}", cfg.experiment);
            assert!(cfg.output_dir().join(f).is_file(), "{}: {f} not written", cfg.experiment);
        }
        assert!(report.passed, "{}: {:?}", cfg.experiment, report.failures());
        let written: RunReport = serde_json::from_slice(&std::fs::read(cfg.output_dir().join("report.json")).unwrap()).unwrap();
        let names = |r: &RunReport| r.tests.iter().map(|t| (t.test.clone(), t.pass)).collect::<Vec<_>>();
        assert_eq!(names(&written), names(&report));
    }
}

#[test]
fn replica_count_changes_streams_but_not_the_answer() {
    let base = r#""experiment": "mean-chord", "domain": "unit-square", "n": 400000, "seed": 21"#;
    let a = run(&format!("{{{base}, \"replicas\": 1}}"));
    let b = run(&format!("{{{base}, \"replicas\": 8}}"));
    let again = run(&format!("{{{base}, \"replicas\": 8}}"));
    let (ea, eb) = (a.estimate("mean-chord").unwrap(), b.estimate("mean-chord").unwrap());
    assert_eq!(eb, again.estimate("mean-chord").unwrap());
    assert_ne!(ea.estimate, eb.estimate);
    assert!((ea.estimate - eb.estimate).abs() < 4.0 * (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt());
    assert_eq!(ea.n, eb.n);
}

#[test]
fn boundary_uniformity_on_sixty_four_bins() {
    let r = run(r#"{"experiment": "walk-stationarity", "domain": "l-shape", "n": 1000000, "seed": 22, "params": {"bins": 64}}"#);
    assert!(r.test("boundary-uniformity").unwrap().p_value > 0.001);
    assert!(r.check("tv-to-uniform").unwrap().pass);
    assert!(r.check("mean-flight-relative-error").unwrap().pass);
    assert_eq!(r.counters.resample_count, 0);
}

#[test]
fn non_cosine_walk_matches_the_kernel() {
    let r = run(
        r#"{"experiment": "walk-stationarity", "domain": "unit-square", "law": {"law": "uniform"},
            "n": 1000000, "seed": 23, "params": {"bins": 40}}"#,
    );
    assert!(r.test("boundary-uniformity").is_none());
    let tv = r.check("tv-to-kernel").unwrap();
    assert!(tv.pass, "{}", tv.value);
    // the uniform law favours corners, so the histogram is visibly not flat
    assert!(r.values["tv_to_uniform"] > 2.0 * tv.value);
}

#[test]
fn tabulated_law_on_the_ellipse() {
    let r = run(
        r#"{"experiment": "kernel-solve", "domain": "ellipse-2x1", "n": 400, "seed": 24,
            "law": {"law": "custom", "custom_pdf": [[0, 2], [0.7853981633974483, 1], [1.5707963267948966, 0]]},
            "params": {"walk_steps": 500000}}"#,
    );
    assert!(r.passed, "{:?}", r.failures());
}

#[test]
fn kernel_solve_on_a_corner_domain_records_flagged_panels() {
    let r = run(r#"{"experiment": "kernel-solve", "domain": "l-shape", "n": 240, "seed": 25, "params": {"quadrature": "midpoint", "doblin_steps": 1}}"#);
    assert!(r.values["flagged_panels"] > 0.0);
    // the visibility gap of the reentrant corner makes the one-step bound zero
    assert!(!r.check("doblin-min-1-step").unwrap().pass);
    assert!(!r.passed);
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"experiment": "bertrand", "domain": "unit-square", "n": 1000, "seed": 1}"#, "domain"),
        (r#"{"experiment": "crossings", "domain": "unit-disk", "n": 1000, "seed": 1}"#, "params.surface"),
        (r#"{"experiment": "induced-chords", "domain": "unit-disk", "n": 1000, "seed": 1, "params": {"subdomain": "annulus-1-2"}}"#, "params.subdomain"),
        (r#"{"experiment": "ergodicity-decay", "domain": "unit-disk", "n": 1000, "seed": 1, "params": {"times": [2, 1]}}"#, "params.times"),
        (r#"{"experiment": "mean-chord", "domain": "unit-disk", "law": {"law": "uniform"}, "n": 1000, "seed": 1}"#, "law"),
        (r#"{"experiment": "clt", "domain": "unit-disk", "n": 1000, "seed": 1, "params": {"batchez": 3}}"#, "batchez"),
    ];
    for (json, field) in cases {
        let err = ExperimentConfig::from_json(json).and_then(|mut c| {
            c.base_dir = dir.path().to_path_buf();
            validate(&c).map(|_| ())
        });
        match err {
            Err(ExperimentError::Config { field: f, .. }) => assert!(f.contains(field), "{json}: got field {f}"),
            other => panic!("{json}: expected a config error, got {other:?}"),
        }
    }
    assert!(!dir.path().join("output").exists());
}

#[test]
fn decay_start_must_be_on_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{"experiment": "ergodicity-decay", "domain": "unit-disk", "n": 1000, "seed": 1, "params": {"start": [0.2, 0.1]}}"#,
        dir.path(),
    );
    assert!(matches!(run_experiment(&cfg), Err(ExperimentError::Config { .. })));
    let ok = config(
        r#"{"experiment": "ergodicity-decay", "domain": "unit-disk", "n": 10000, "seed": 1, "params": {"start": [0, 1], "times": [1, 2]}}"#,
        dir.path(),
    );
    let r = run_experiment(&ok).unwrap();
    assert!(r.values["tv_1"] > r.values["tv_2"]);
    assert!(r.values["tv_2"] > r.values["noise_floor"]);
}
