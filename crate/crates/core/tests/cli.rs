//! End-to-end tests of the `verify` binary: exit codes, stdout lines,
//! report artifacts, and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use finsler_liouville::report::RunReport;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_verify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verify"))
        .args(args)
        .output()
        .expect("spawn verify binary")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

#[test]
fn default_config_passes_and_writes_all_artifacts() {
    let out_dir = tempfile::tempdir().expect("temp dir");
    let out = run_verify(&[
        "run",
        "--config",
        config_path("default.json").to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
    ]);
    let stdout = stdout_of(&out);
    assert_eq!(out.status.code(), Some(0), "stdout:\n{stdout}\nstderr:\n{}", stderr_of(&out));

    // One line per check plus a summary naming the report path.
    assert!(stdout.lines().any(|l| l.starts_with("PASS gauge.homogeneity ")));
    assert!(stdout.lines().any(|l| l.starts_with("PASS poincare.corollary_cap ")));
    assert!(!stdout.contains("FAIL"));
    assert!(stdout.contains("47 of 47 checks passed"));

    // The report round-trips and contains the quantized mass: 8 pi on the
    // full plane with the Euclidean gauge.
    let report_text =
        fs::read_to_string(out_dir.path().join("report.json")).expect("report.json");
    let report: RunReport = serde_json::from_str(&report_text).expect("parse report");
    assert!(report.overall_pass);
    assert_eq!(report.checks.len(), 47);
    let mass = report
        .checks
        .iter()
        .find(|c| c.name == "mass.quantization")
        .expect("mass.quantization record");
    let expected = 8.0 * std::f64::consts::PI;
    assert!(
        (mass.lhs - expected).abs() <= 0.005 * expected,
        "semi-analytic mass {} is not within 0.5% of 8 pi",
        mass.lhs
    );

    // All three tables exist and have a header plus at least one data row.
    for table in ["levels.csv", "convergence.csv", "asymptotics.csv"] {
        let text = fs::read_to_string(out_dir.path().join("tables").join(table))
            .unwrap_or_else(|e| panic!("missing table {table}: {e}"));
        assert!(text.lines().count() >= 2, "table {table} has no data rows");
    }

    // Timing goes to stderr only, keeping stdout and artifacts diffable.
    assert!(stderr_of(&out).contains("wall time"));
    assert!(!stdout.contains("wall time"));
}

#[test]
fn suite_seed_and_budget_flags_override_the_config() {
    let out_dir = tempfile::tempdir().expect("temp dir");
    let out = run_verify(&[
        "run",
        "--config",
        config_path("default.json").to_str().unwrap(),
        "--suite",
        "gauge",
        "--seed",
        "7",
        "--budget",
        "20000",
        "--out",
        out_dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr:\n{}", stderr_of(&out));
    let report_text =
        fs::read_to_string(out_dir.path().join("report.json")).expect("report.json");
    let report: RunReport = serde_json::from_str(&report_text).expect("parse report");
    assert_eq!(report.checks.len(), 3, "gauge suite alone emits three records");
    assert!(report.checks.iter().all(|c| c.name.starts_with("gauge.")));
}

#[test]
fn misplaced_center_is_refused_before_any_suite_runs() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("bad-center.json");
    fs::write(
        &config,
        r#"{
            "gauge": { "kind": "euclidean" },
            "cone": { "kind": "orthant", "constrained": 2 },
            "solution": { "N": 2, "lambda": 1.0, "x0": [1.0, 0.0] },
            "quadrature": { "method": "tensor_polar", "budget": 20000 },
            "suites": ["gauge"],
            "seed": 42
        }"#,
    )
    .expect("write config");
    let out = run_verify(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = stderr_of(&out);
    assert!(stderr.contains("must lie"), "stderr was: {stderr}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("typo.json");
    fs::write(
        &config,
        r#"{
            "gauge": { "kind": "euclidean" },
            "cone": { "kind": "full_space" },
            "solution": { "N": 2, "lambda": 1.0, "x0": [0.0, 0.0] },
            "quadrature": { "method": "tensor_polar", "budget": 20000 },
            "suites": ["gauge"],
            "seed": 42,
            "tolerence": {}
        }"#,
    )
    .expect("write config");
    let out = run_verify(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = stderr_of(&out);
    assert!(stderr.contains("unknown field"), "stderr was: {stderr}");
}

#[test]
fn unknown_suite_name_is_rejected() {
    let out = run_verify(&[
        "run",
        "--config",
        config_path("smoke.json").to_str().unwrap(),
        "--suite",
        "nonsense",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = stderr_of(&out);
    assert!(stderr.contains("nonsense"), "stderr was: {stderr}");
}

#[test]
fn tolerance_below_the_noise_floor_fails_with_an_explanation() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("tight.json");
    fs::write(
        &config,
        r#"{
            "gauge": { "kind": "euclidean" },
            "cone": { "kind": "full_space" },
            "solution": { "N": 2, "lambda": 1.0, "x0": [0.0, 0.0] },
            "quadrature": { "method": "tensor_polar", "budget": 20000 },
            "suites": ["mass"],
            "seed": 42,
            "tolerances": { "mass.cross_estimator": 1e-12 }
        }"#,
    )
    .expect("write config");
    let out_dir = tempfile::tempdir().expect("temp dir");
    let out = run_verify(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "stdout:\n{}", stdout_of(&out));

    let report_text =
        fs::read_to_string(out_dir.path().join("report.json")).expect("report.json");
    let report: RunReport = serde_json::from_str(&report_text).expect("parse report");
    assert!(!report.overall_pass);
    let failing = report
        .checks
        .iter()
        .find(|c| c.name == "mass.cross_estimator")
        .expect("cross estimator record");
    assert!(!failing.pass);
    assert!(
        failing.note.contains("noise floor"),
        "note does not explain the floor: {}",
        failing.note
    );
    // Only the overridden record fails; the physics is still right.
    assert!(report.checks.iter().filter(|c| !c.pass).count() == 1);
}

#[test]
fn identical_config_and_seed_give_byte_identical_outputs() {
    let run = |dir: &Path| {
        let out = run_verify(&[
            "run",
            "--config",
            config_path("smoke.json").to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr:\n{}", stderr_of(&out));
        stdout_of(&out)
    };
    let dir_a = tempfile::tempdir().expect("temp dir");
    let dir_b = tempfile::tempdir().expect("temp dir");
    let stdout_a = run(dir_a.path());
    let stdout_b = run(dir_b.path());
    // The summary line names the output directory; everything before it
    // must match byte for byte.
    let strip_path = |s: &str| {
        s.lines()
            .map(|l| l.split("; report at").next().unwrap_or(l).to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip_path(&stdout_a), strip_path(&stdout_b), "stdout must be deterministic");

    let report_a = fs::read(dir_a.path().join("report.json")).expect("report a");
    let report_b = fs::read(dir_b.path().join("report.json")).expect("report b");
    assert_eq!(report_a, report_b, "report bytes must be identical");

    let tables_a = dir_a.path().join("tables");
    let tables_b = dir_b.path().join("tables");
    let mut names: Vec<String> = fs::read_dir(&tables_a)
        .expect("tables dir")
        .map(|e| e.expect("entry").file_name().into_string().expect("utf-8 name"))
        .collect();
    names.sort();
    for name in &names {
        let a = fs::read(tables_a.join(name)).expect("table a");
        let b = fs::read(tables_b.join(name)).expect("table b");
        assert_eq!(a, b, "table {name} must be byte-identical");
    }
}
