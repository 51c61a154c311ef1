//! The `varlex` binary: exit codes, report files and pass-through commands.

use std::path::Path;
use std::process::{Command, Output};

use varlex_experiments::report::{ExperimentReport, Status};

fn varlex(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varlex"))
        .args(args)
        .current_dir(dir)
        .env("VARLEX_OUTPUT_DIR", dir.join("out"))
        .env_remove("VARLEX_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_function(dir: &Path, name: &str, values: &[f64]) {
    let body = serde_json::json!({
        "box": {"dim": 1, "bounds": [[-1.0, 1.0]], "cells": [values.len()]},
        "values": values,
    });
    std::fs::write(dir.join(name), body.to_string()).unwrap();
}

#[test]
fn verify_writes_reports_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = varlex(
        &[
            "verify", "singular", "--seed", "7", "--sizes", "64", "--trials", "5",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = ExperimentReport::read(&tmp.path().join("out/singular.json")).unwrap();
    assert!(report.passed());
    let csv = std::fs::read_to_string(tmp.path().join("out/singular.csv")).unwrap();
    assert_eq!(csv.lines().count(), report.checks.len() + 1);
}

#[test]
fn estimates_never_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let o = varlex(
        &[
            "estimate", "lerner", "--lambda", "0.5", "--sizes", "64", "--trials", "10",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let report = ExperimentReport::read(&tmp.path().join("out/lerner.json")).unwrap();
    assert!(report.checks.iter().all(|c| c.status == Status::Recorded));
    assert!(report.estimates.lerner_c_hat.is_some());
}

#[test]
fn same_seed_same_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for _ in 0..2 {
        let o = varlex(
            &[
                "verify",
                "pointwise",
                "--seed",
                "3",
                "--sizes",
                "64",
                "--trials",
                "8",
            ],
            tmp.path(),
        );
        assert_eq!(code(&o), 0);
        hashes.push(
            ExperimentReport::read(&tmp.path().join("out/pointwise.json"))
                .unwrap()
                .determinism_hash()
                .unwrap(),
        );
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn pass_through_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let f: Vec<f64> = (0..32).map(|i| if i < 16 { 1.0 } else { -1.0 }).collect();
    write_function(tmp.path(), "f.json", &f);
    write_function(tmp.path(), "p.json", &[2.0; 32]);
    let o = varlex(
        &[
            "norm",
            "--space",
            "luxemburg",
            "-f",
            "f.json",
            "-p",
            "p.json",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // |f| = 1 on a set of measure 2
    assert!((v["value"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-10);
    let o = varlex(&["maximal", "--kind", "hl", "-f", "f.json"], tmp.path());
    assert_eq!(code(&o), 0);
    let o = varlex(
        &["transform", "-f", "f.json", "--commutator", "p.json"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let g: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // constant symbol: the commutator vanishes
    assert!(g["values"]
        .as_array()
        .unwrap()
        .iter()
        .all(|x| x.as_f64().unwrap().abs() < 1e-12));
}

#[test]
fn bad_input_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.json"), "{not json").unwrap();
    assert_eq!(
        code(&varlex(
            &["norm", "--space", "classic", "-q", "2", "-f", "bad.json"],
            tmp.path()
        )),
        2
    );
    assert_eq!(
        code(&varlex(
            &["norm", "--space", "luxemburg", "-f", "missing.json"],
            tmp.path()
        )),
        2
    );
    assert_eq!(
        code(&varlex(
            &["verify", "pointwise", "--sizes", "100"],
            tmp.path()
        )),
        2
    );
    assert_eq!(code(&varlex(&["verify", "nothing"], tmp.path())), 2);
}

#[test]
fn merge_propagates_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let o = varlex(
        &["verify", "singular", "--sizes", "64", "--trials", "3"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let path = tmp.path().join("out/singular.json");
    let mut failing = ExperimentReport::read(&path).unwrap();
    failing.suite = "broken".into();
    failing.fail("forced", "test", "forced failure".into(), 0, 0);
    failing.write(&tmp.path().join("out")).unwrap();
    let merged = tmp.path().join("merged");
    let args = [
        "report",
        "merge",
        "out/singular.json",
        "out/broken.json",
        "-o",
        merged.to_str().unwrap(),
    ];
    assert_eq!(code(&varlex(&args, tmp.path())), 1);
    let ok = [
        "report",
        "merge",
        "out/singular.json",
        "-o",
        merged.to_str().unwrap(),
    ];
    assert_eq!(code(&varlex(&ok, tmp.path())), 0);
}
