use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_epsgood"))
}

fn write_instance(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn solve_two_arm() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(
        dir.path(),
        "two.json",
        r#"{"means":[0.9,0.6],"epsilon":0.05}"#,
    );
    let v = json(&run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--accuracy",
        "1e-4",
    ]));
    assert!((v["t_star"].as_f64().unwrap() - 128.0).abs() < 1.28);
    assert_eq!(v["weights"].as_array().unwrap().len(), 2);
}

#[test]
fn oracle_reports_one_based_arms() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(
        dir.path(),
        "two.json",
        r#"{"means":[0.9,0.6],"epsilon":0.05}"#,
    );
    let v = json(&run(&[
        "oracle",
        "--instance",
        inst.to_str().unwrap(),
        "--weights",
        "0.5,0.5",
    ]));
    assert_eq!(v["case"], "bad_made_good");
    assert_eq!(v["k"], 2);
    assert!((v["cost"].as_f64().unwrap() - 0.0078125).abs() < 1e-12);
}

#[test]
fn run_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(
        dir.path(),
        "two.json",
        r#"{"means":[0.9,0.6],"epsilon":0.05}"#,
    );
    let p = inst.to_str().unwrap();
    let v = json(&run(&[
        "run",
        "--instance",
        p,
        "--delta",
        "0.1",
        "--seed",
        "3",
    ]));
    assert_eq!(v["answer"], serde_json::json!([1]));
    assert!(v["stopping_time"].as_u64().unwrap() >= 2);
    let b = json(&run(&[
        "bounds",
        "--instance",
        p,
        "--delta",
        "0.1",
        "--accuracy",
        "1e-4",
    ]));
    assert!(b["margin_bound"].as_f64().unwrap() <= b["t_star"].as_f64().unwrap());
}

#[test]
fn mc_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(
        dir.path(),
        "two.json",
        r#"{"means":[0.9,0.6],"epsilon":0.05}"#,
    );
    let out = dir.path().join("mc.csv");
    let status = run(&[
        "mc",
        "--instance",
        inst.to_str().unwrap(),
        "--delta-grid",
        "0.1,0.01",
        "--trials",
        "5",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("kind,delta,trial,seed,tau,correct,capped"));
    assert_eq!(lines.len(), 1 + 2 * 5 + 2);
    assert_eq!(lines.iter().filter(|l| l.starts_with("summary")).count(), 2);
}

#[test]
fn budget_writes_stride_points() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(
        dir.path(),
        "m.json",
        r#"{"means":[0.9,0.8,0.3],"epsilon":0.2,"mode":"multiplicative"}"#,
    );
    let out = run(&[
        "budget",
        "--instance",
        inst.to_str().unwrap(),
        "--budget",
        "203",
        "--stride",
        "100",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let ts: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ts, ["3", "103", "203"]);
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_instance(dir.path(), "bad.json", r#"{"means":[0.9],"epsilon":0.05}"#);
    let good = write_instance(
        dir.path(),
        "two.json",
        r#"{"means":[0.9,0.6],"epsilon":0.05}"#,
    );
    assert_eq!(
        run(&["solve", "--instance", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let neg = write_instance(
        dir.path(),
        "neg.json",
        r#"{"means":[0.9,-0.1],"epsilon":0.05,"mode":"multiplicative"}"#,
    );
    assert_eq!(
        run(&["solve", "--instance", neg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let g = good.to_str().unwrap();
    assert_eq!(
        run(&["run", "--instance", g, "--delta", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["oracle", "--instance", g, "--weights", "0.5,0.4"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["mc", "--instance", g, "--delta", "0.1", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn io_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(
        run(&["solve", "--instance", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    let good = write_instance(
        dir.path(),
        "two.json",
        r#"{"means":[0.9,0.6],"epsilon":0.05}"#,
    );
    let out = dir.path().join("no_such_dir").join("x.csv");
    let code = run(&[
        "mc",
        "--instance",
        good.to_str().unwrap(),
        "--delta",
        "0.1",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .code();
    assert_eq!(code, Some(3));
}
