use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn unitsml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unitsml"))
        .args(args)
        .env_remove("UNITSML_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const PENDULUM_SPEC: &str = r#"{
  "base_units": ["kg", "m", "s"],
  "features": [
    {"name": "m", "units": "kg"},
    {"name": "k_s", "units": "kg s^-2"},
    {"name": "L", "units": "m"},
    {"name": "g", "units": "m s^-2"},
    {"name": "q", "units": "m"}
  ]
}"#;

#[test]
fn units_check_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, PENDULUM_SPEC).unwrap();
    let report = dir.path().join("check.json");
    let o = unitsml(&["units-check", spec.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("d=5 k=3 rank=3 s=2"), "{}", stdout(&o));
    assert!(stdout(&o).contains("`L` and `q` share units"));
    let r = json(&report);
    assert_eq!(r["s"], 2);
    assert_eq!(r["schema_version"], 1);
}

#[test]
fn basis_and_enumerate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, PENDULUM_SPEC).unwrap();
    let out = dir.path().join("basis.json");
    let o = unitsml(&["basis", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let basis = json(&out);
    let basis = basis.as_array().unwrap();
    assert_eq!(basis.len(), 2);
    for b in basis {
        assert_eq!(b["units"], "1");
    }

    let list = dir.path().join("enum.json");
    let o = unitsml(&[
        "enumerate",
        spec.to_str().unwrap(),
        "--max-degree",
        "1",
        "--dimensionless-only",
        "--out",
        list.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let e = json(&list);
    assert_eq!(e["count"].as_u64().unwrap() as usize, e["monomials"].as_array().unwrap().len());
    assert!(stdout(&o).starts_with("count="));
}

#[test]
fn bad_spec_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("empty.json");
    fs::write(&spec, r#"{"base_units": ["m"], "features": []}"#).unwrap();
    let o = unitsml(&["units-check", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    fs::write(&spec, r#"{"base_units": ["m"], "features": [{"name": "x", "units": "furlong"}]}"#).unwrap();
    let o = unitsml(&["basis", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("furlong"));
}

#[test]
fn bad_csv_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "a,label\nm,m\n1,oops\n").unwrap();
    let o = unitsml(&["regress", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 0, column 1") && err.contains("oops"), "{err}");
}

#[test]
fn blackbody_experiment_then_regress() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bb");
    let o = unitsml(&[
        "experiment",
        "blackbody",
        "--out",
        out.to_str().unwrap(),
        "--n-train",
        "64",
        "--n-test",
        "16",
        "--seed",
        "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "spec.json", "train.csv", "test.csv", "model.json", "predictions.csv", "metadata.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let report = json(&out.join("report.json"));
    assert_eq!(report["s"], 0);
    assert!((report["constant"].as_f64().unwrap() - 2.0).abs() < 0.05);
    let meta = json(&out.join("metadata.json"));
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["config"]["n_train"], 64);

    let rep = dir.path().join("regress.json");
    let model = dir.path().join("model.json");
    let preds = dir.path().join("preds.csv");
    let o = unitsml(&[
        "regress",
        out.join("train.csv").to_str().unwrap(),
        "--test",
        out.join("test.csv").to_str().unwrap(),
        "--spec",
        out.join("spec.json").to_str().unwrap(),
        "--report",
        rep.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--predictions",
        preds.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&rep);
    assert!(r["equivariance_residual"].as_f64().unwrap() < 1e-12);
    assert!(r["metrics"]["test_pearson"].as_f64().unwrap() > 0.999);
    assert_eq!(r["config"]["method"], "ols");
    assert_eq!(fs::read_to_string(&preds).unwrap().lines().count(), 17);
    let m = json(&model);
    assert!((m["weights"][0].as_f64().unwrap() - 2.0).abs() < 0.05);
}

#[test]
fn experiment_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = unitsml(&["experiment", "blackbody", "--out", out.to_str().unwrap(), "--n-train", "32", "--n-test", "8"]);
        assert!(o.status.success());
        (fs::read(out.join("train.csv")).unwrap(), fs::read(out.join("report.json")).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn config_file_values_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 9, "blackbody": {"n_train": 40, "n_test": 10}}"#).unwrap();
    let out = dir.path().join("bb");
    let o = unitsml(&[
        "--config",
        cfg.to_str().unwrap(),
        "experiment",
        "blackbody",
        "--out",
        out.to_str().unwrap(),
        "--n-test",
        "12",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = json(&out.join("metadata.json"));
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["config"]["n_train"], 40);
    assert_eq!(meta["config"]["n_test"], 12);

    fs::write(&cfg, r#"{"blackbody": {"n_trian": 40}}"#).unwrap();
    let o = unitsml(&["--config", cfg.to_str().unwrap(), "experiment", "blackbody", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tiny_rietkerk_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"rietkerk": {"n_train": 40, "n_test": 8, "grid": {"cells": 8, "dl": 2.0, "t_total": 2.0, "dt": 0.005}}}"#,
    )
    .unwrap();
    let out = dir.path().join("rk");
    let o = unitsml(&[
        "--config",
        cfg.to_str().unwrap(),
        "--threads",
        "1",
        "experiment",
        "rietkerk",
        "--out",
        out.to_str().unwrap(),
        "--snapshot",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("report.json"));
    assert!(r["attempted"].as_u64().unwrap() >= 48);
    for f in ["final.bin", "final.json", "initial.bin", "runs.json", "baseline.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    // three f64 fields on an 8 x 8 grid
    assert_eq!(fs::metadata(out.join("final.bin")).unwrap().len(), 3 * 64 * 8);
    assert!(stdout(&o).contains("baseline"));
}
