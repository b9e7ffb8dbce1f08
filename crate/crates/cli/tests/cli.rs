//! End-to-end runs of the `fraclab` binary: config handling, exit codes,
//! summaries and reproducibility.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclab")).current_dir(dir).args(args).output().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

// ═══════════════════════════════════════════════════════════════════
// Configuration errors
// ═══════════════════════════════════════════════════════════════════

#[test]
fn malformed_config_exits_1_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{\"params\": {\"n\": 3, ");
    let out = run(tmp.path(), &["constants", "--config", &cfg, "--out", "res"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed"));
    assert!(!tmp.path().join("res").exists());
}

#[test]
fn missing_keys_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{\"params\": {\"n\": 3}}");
    let out = run(tmp.path(), &["constants", "--config", &cfg, "--out", "res"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.s"));
    assert!(!tmp.path().join("res").exists());
    // the flag fills the missing key
    let out = run(tmp.path(), &["constants", "--config", &cfg, "--s", "0.5", "--out", "res"]);
    assert_eq!(out.status.code(), Some(0));
}

// ═══════════════════════════════════════════════════════════════════
// Subcommands
// ═══════════════════════════════════════════════════════════════════

#[test]
fn constants_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["constants", "--n", "3", "--s", "0.5", "--out", "res"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&tmp.path().join("res"));
    assert_eq!(s["passed"], true);
    let h = s["results"]["hardy_constant"].as_f64().unwrap();
    assert!((h - 0.6366198).abs() <= 1e-7);
    assert_eq!(s["config"]["params"]["p"], 2.0);
    assert!(tmp.path().join("res/constants.csv").exists());
}

#[test]
fn eig_reports_first_eigenvalue() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["eig", "--n", "3", "--s", "0.5", "--lambda", "0.3", "--out", "res"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&tmp.path().join("res"));
    let mu1 = s["results"]["mu1"].as_f64().unwrap();
    let want = 2.0 / std::f64::consts::PI - 0.3;
    assert!((mu1 - want).abs() / want <= 1e-3, "{mu1} vs {want}");
}

#[test]
fn failed_check_exits_2_and_keeps_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"params": {"n": 3, "s": 0.5},
            "grid": {"per_decade": 20, "strip_r_min": 0.1, "strip_per_decade": 10, "t_nodes": 20},
            "pohozaev": {"tolerance": 1e-9}}"#,
    );
    let out = run(tmp.path(), &["pohozaev", "--config", &cfg, "--out", "res"]);
    assert_eq!(out.status.code(), Some(2));
    let s = summary(&tmp.path().join("res"));
    assert_eq!(s["passed"], false);
    assert!(tmp.path().join("res/pohozaev.csv").exists());
}

#[test]
fn numerical_failure_exits_3_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"params": {"n": 3, "s": 0.5}, "grid": {"angular_cells": 8}}"#);
    let out = run(tmp.path(), &["eig", "--config", &cfg, "--out", "res"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(tmp.path().join("res/error.json").exists());
    assert!(!tmp.path().join("res/summary.json").exists());
}

#[test]
fn groundstate_above_hardy_runs_probe() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["groundstate", "--n", "3", "--s", "0.5", "--lambda", "1.0", "--out", "res"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&tmp.path().join("res"));
    assert_eq!(s["results"]["mode"], "indefiniteness_probe");
    assert!(s["results"]["probe"]["min_q"].as_f64().unwrap() < 0.0);
    assert!(tmp.path().join("res/probe.csv").exists());
}

#[test]
fn runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let out = run(tmp.path(), &["kelvin-check", "--n", "2", "--s", "0.4", "--seed", "9", "--out", dir]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(tmp.path().join("a/kelvin_checks.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/kelvin_checks.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(summary(&tmp.path().join("a"))["results"], summary(&tmp.path().join("b"))["results"]);
}
