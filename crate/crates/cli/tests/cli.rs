use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn cqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqc")).args(args).arg("--quiet").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error line");
    serde_json::from_str(line).expect("stderr error is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cqc-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn census_csv_rows() {
    let out = cqc(&["census", "--max-len", "6", "--side", "12"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let counts: Vec<(String, u64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[2].parse().unwrap())
        })
        .collect();
    let primal: Vec<u64> = counts.iter().filter(|c| c.0 == "primal").map(|c| c.1).collect();
    let dual: Vec<u64> = counts.iter().filter(|c| c.0 == "dual").map(|c| c.1).collect();
    assert_eq!(primal, [1, 0, 0, 7, 0, 106]);
    assert_eq!(dual, [0, 0, 4, 8, 52, 200]);
}

#[test]
fn census_to_file_reports_on_stdout() {
    let path = scratch("census.csv");
    let out = cqc(&["census", "--max-len", "5", "--side", "12", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["command"], "census");
    assert_eq!(r["config"]["max_len"], 5);
    assert_eq!(r["geometry_version"], "rhg-injection-pyramid-v1");
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("kind,length,count,geometry_version\n"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let runs: Vec<Vec<Vec<u8>>> = (0..2)
        .map(|_| {
            vec![
                cqc(&["census", "--max-len", "7", "--side", "12", "--format", "json"]).stdout,
                cqc(&["simulate", "--shots", "2000", "--dims", "3,3,3", "--q", "0.1"]).stdout,
                cqc(&["simulate", "--target", "boundary", "--shots", "3000", "--q", "0.2", "--format", "csv"]).stdout,
                cqc(&["landscape", "--phi-points", "7", "--q-points", "7"]).stdout,
            ]
        })
        .collect();
    assert!(runs[0].iter().all(|r| !r.is_empty()));
    assert_eq!(runs[0], runs[1]);
    // Different seeds differ.
    let a = cqc(&["simulate", "--shots", "2000", "--dims", "3,3,3", "--q", "0.1", "--seed", "9"]).stdout;
    assert_ne!(a, runs[0][1]);
}

#[test]
fn config_file_and_flag_override() {
    let path = scratch("verify.json");
    std::fs::write(&path, r#"{"command": "verify", "mean": 0.30, "cells": 1000000, "delta": 1e-6}"#).unwrap();
    let out = cqc(&["verify", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["result"]["verdict"], "quantum_side");
    assert!(r["result"]["margin"].as_f64().unwrap() > 0.0);
    assert_eq!(r["config"]["cells"], 1000000);
    let hash = r["config_hash"].as_str().unwrap().to_string();

    let out = cqc(&["verify", "--config", path.to_str().unwrap(), "--mean", "0.155"]);
    let r = json(&out);
    assert_eq!(r["config"]["mean"], 0.155);
    assert_eq!(r["result"]["verdict"], "inconclusive");
    assert_ne!(r["config_hash"], hash.as_str());
}

#[test]
fn exit_codes() {
    let out = cqc(&["census", "--max-len", "20", "--side", "12"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["error"]["kind"], "resource-guard");

    let out = cqc(&["verify", "--cells", "10"]);
    assert_eq!(out.status.code(), Some(2));

    let path = scratch("wrong.json");
    std::fs::write(&path, r#"{"command": "census", "max_len": 3}"#).unwrap();
    let out = cqc(&["verify", "--config", path.to_str().unwrap(), "--mean", "0.2", "--cells", "10"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&path, r#"{"max_lenn": 3}"#).unwrap();
    let out = cqc(&["census", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = cqc(&["simulate", "--target", "boundary", "--theta", "0.3927", "--q", "0.01"]);
    assert_eq!(out.status.code(), Some(2));

    let out = cqc(&["census", "--max-len", "4", "--side", "12", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(2));

    let out = cqc(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thresholds_table() {
    let out = cqc(&["thresholds", "--all", "--census-len", "8", "--side", "16", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value = |name: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!((value("topological-dephasing") - 0.16667).abs() < 5e-6);
    assert!((value("distillation") - 0.14645).abs() < 5e-6);
    assert!((value("depth-four-boundary") - 0.134).abs() < 1e-3);
}

#[test]
fn reproduce_reports_cell_deltas() {
    let ok = cqc(&["reproduce", "table1", "--max-len", "8", "--side", "16"]);
    assert!(ok.status.success());
    assert_eq!(json(&ok)["result"]["matched"], 16);

    let out = cqc(&["reproduce", "table1", "--max-len", "10", "--side", "20"]);
    assert_eq!(out.status.code(), Some(3));
    let err = error_json(&out);
    let d = &err["error"]["details"][0];
    assert_eq!((d["kind"].as_str(), d["length"].as_u64(), d["delta"].as_i64()), (Some("primal"), Some(10), Some(4)));
    // The report is still written.
    assert_eq!(json(&out)["result"]["matched"], 19);
}

#[test]
fn parity_manifest_within_three_sigma() {
    let out = cqc(&["reproduce", "parity-mc", "--shots", "20000", "--dims", "3,3,3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let checks = json(&out)["result"]["checks"].as_array().unwrap().clone();
    assert_eq!(checks.len(), 3);
}

#[test]
fn oracle_check_passes() {
    let out = cqc(&["oracle-check", "--cases", "40", "--boundary-shots", "100000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["result"]["stabilizer"]["max_deviation"].as_f64().unwrap() < 1e-9);
}

#[test]
fn landscape_curves_file() {
    let curves = scratch("curves.json");
    let csv = scratch("land.csv");
    let out = cqc(&[
        "landscape",
        "--phi-points",
        "11",
        "--q-points",
        "6",
        "--magic-bound",
        "0.134",
        "--out",
        csv.to_str().unwrap(),
        "--curves-out",
        curves.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["result"]["magic_bound"], 0.134);
    assert!((r["result"]["stabilizer_curve_at_zero"].as_f64().unwrap() - 0.146447).abs() < 1e-6);
    let c: Value = serde_json::from_str(&std::fs::read_to_string(curves).unwrap()).unwrap();
    assert_eq!(c["curves"].as_array().unwrap().len(), 3);
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 67);
}
