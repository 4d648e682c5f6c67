use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"{"target": {"class": "jk", "k": 2, "c": 2.0},
  "estimators": [{"kind": "deep_constructive"},
                 {"kind": "krr", "kernel": {"type": "laplace", "lengthscale": 0.2},
                  "lambda": {"policy": "fixed", "value": 0.05}}],
  "n_grid": [64, 128, 256, 512], "replications": 2, "sigma": 0.5}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparse-minimax"))
}

fn run_in(dir: &Path, args: &[&str]) -> std::process::Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    bin()
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

#[test]
fn run_rates_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["run", "--seed", "4", "--threads", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let o = dir.path().join("out");
    let csv = std::fs::read_to_string(o.join("risks.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "estimator,n,rep,risk,risk_se,fit_seconds"
    );
    assert_eq!(csv.lines().count(), 1 + 4 * 2 * 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(o.join("rates.json")).unwrap()).unwrap();
    for key in [
        "estimator",
        "slope",
        "slope_se",
        "reference_exponent",
        "cells",
    ] {
        assert!(json[0].get(key).is_some(), "missing {key}");
    }
    let first = std::fs::read(o.join("rates.json")).unwrap();
    std::fs::remove_file(o.join("rates.json")).unwrap();
    std::fs::remove_file(o.join("rates.svg")).unwrap();
    assert!(run_in(dir.path(), &["rates"]).status.success());
    assert_eq!(std::fs::read(o.join("rates.json")).unwrap(), first);
    assert!(run_in(dir.path(), &["plot"]).status.success());
    let svg = std::fs::read_to_string(o.join("rates.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("shape only"));
}

#[test]
fn gen_writes_target_and_data() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["gen"]).status.success());
    let o = dir.path().join("out");
    assert!(o.join("target.json").exists());
    let data = std::fs::read_to_string(o.join("data").join("n64_r1.csv")).unwrap();
    assert_eq!(data.lines().next().unwrap(), "x1,y");
    assert_eq!(data.lines().count(), 65);
}

#[test]
fn verify_exit_codes() {
    let ok = bin()
        .args(["verify", "--check", "quantized_cover"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["name"], "quantized_cover");
    assert_eq!(report["passed"], true);
    let bad = bin()
        .args(["verify", "--check", "nonexistent"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn entropy_prints_bounds() {
    let out = bin()
        .args([
            "entropy",
            "--depth",
            "2",
            "--sparsity",
            "10",
            "--width",
            "4",
            "--delta",
            "0.1",
            "--share",
            "2",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["covering"].as_f64().unwrap() - 60.0 * 150f64.ln()).abs() < 1e-9);
    assert!((v["shared"].as_f64().unwrap() - 340.0 * 300f64.ln()).abs() < 1e-9);
}
