//! Behavior of the `symptube` binary: subcommands, exit codes, report
//! determinism, and the spec-file round trip.

use std::path::Path;
use std::process::{Command, Output};

use symptube_cli::config::RunConfig;
use symptube_cli::suite::run_verify;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_symptube"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn list_examples_is_stable_and_dimensioned() {
    let out = run(&["list-examples"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let heis = text.find("heisenberg").unwrap();
    let sphere = text.find("sphere").unwrap();
    let corrupt = text.find("heisenberg-corrupt").unwrap();
    assert!(heis < sphere && sphere < corrupt, "{text}");
    for line in text.lines() {
        assert!(line.contains("dim 3"), "{line}");
    }
    // listing is byte-stable across runs
    let again = run(&["list-examples"]);
    assert_eq!(text.as_bytes(), again.stdout.as_slice());
}

#[test]
fn verify_pass_fail_and_config_error_exit_codes() {
    let ok = run(&[
        "verify",
        "--example",
        "heisenberg",
        "--samples",
        "40",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(ok.status.code(), Some(0));

    let fail = run(&[
        "verify",
        "--example",
        "heisenberg-corrupt",
        "--samples",
        "40",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(fail.status.code(), Some(1));
    let summary = String::from_utf8(fail.stderr).unwrap();
    assert!(summary.contains("not holomorphic"), "{summary}");

    let bad = run(&["verify", "--example", "nonsense", "--samples", "10"]);
    assert_eq!(bad.status.code(), Some(2));

    let bad = run(&["verify", "--example", "heisenberg", "--n", "9"]);
    assert_eq!(bad.status.code(), Some(2));

    let bad = run(&["verify", "--spec", "/definitely/missing.json"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reports_are_byte_deterministic_for_fixed_seed() {
    let mut cfg = RunConfig::example("sphere", 1);
    cfg.samples = 60;
    cfg.seed = 42;
    let a = run_verify(&cfg).unwrap();
    let b = run_verify(&cfg).unwrap();
    assert_eq!(a.canonical_bytes(), b.canonical_bytes());

    cfg.seed = 43;
    let c = run_verify(&cfg).unwrap();
    assert_ne!(a.canonical_bytes(), c.canonical_bytes());
}

#[test]
fn tolerance_override_flags_flip_checks() {
    let out = run(&[
        "verify",
        "--example",
        "heisenberg",
        "--samples",
        "40",
        "--tol-nondegeneracy",
        "0.1",
        "--out",
        "/dev/null",
    ]);
    // an unattainable tolerance must fail the run
    assert_eq!(out.status.code(), Some(1));
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("FAIL  nondegeneracy"), "{summary}");
}

#[test]
fn csv_report_has_one_row_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = run(&[
        "verify",
        "--example",
        "heisenberg",
        "--samples",
        "40",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "name,samples,max_residual,tolerance,pass,worst_point"
    );
    assert_eq!(lines.count(), 13);
}

#[test]
fn export_then_verify_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heis.json");
    let out = run(&[
        "export-spec",
        "--example",
        "heisenberg",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(Path::new(&path).exists());

    let exported: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(exported["dim_n"], 1);
    assert_eq!(exported["ambient_j"], "standard");

    let out = run(&[
        "verify",
        "--spec",
        path.to_str().unwrap(),
        "--samples",
        "10",
        "--out",
        "/dev/null",
    ]);
    let summary = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(out.status.code(), Some(0), "{summary}");
}

#[test]
fn json_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "verify",
        "--example",
        "sphere",
        "--samples",
        "40",
        "--seed",
        "7",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["version"].is_string());
    assert!(v["config"]["samples"].is_u64());
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["overall_pass"], true);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 13);
    for c in checks {
        assert!(c["name"].is_string());
        assert!(c["samples"].is_u64());
        assert!(c["max_residual"].is_number());
        assert!(c["tolerance"].is_number());
        assert!(c["pass"].is_boolean());
    }
}
