use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drawdown"))
}

struct Models {
    _dir: TempDir,
    bm: PathBuf,
    cpp: PathBuf,
}

fn models() -> Models {
    let dir = tempfile::tempdir().unwrap();
    let bm = dir.path().join("bm.json");
    let cpp = dir.path().join("cpp.json");
    fs::write(&bm, r#"{"mu": 1.0, "sigma": 1.0}"#).unwrap();
    fs::write(&cpp, r#"{"mu": 2.0, "jumps": {"kind": "exp", "rate": 1.0, "alpha": 1.0}}"#).unwrap();
    Models { _dir: dir, bm, cpp }
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

#[test]
fn scale_eval_writes_csv_with_error_columns() {
    let m = models();
    let (code, out, _) = run(bin().args(["scale", "eval", "--q", "1", "--x", "0.5:2:4", "--model"]).arg(&m.bm));
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "x,w,w_error,w_prime,w_prime_error,w_second,w_second_error,z,z_error");
    assert_eq!(lines.count(), 4);
}

#[test]
fn constant_barrier_reproduces_fixed_interval_column() {
    let m = models();
    let (code, out, _) = run(bin()
        .args(["identity", "eval", "--xi", r#"{"kind":"constant","c":-1.0}"#, "--which", "up-exit"])
        .args(["--x", "0.2", "--b", "1.5", "--q", "0.5,1,2", "--model"])
        .arg(&m.cpp));
    assert_eq!(code, 0);
    let rows: Vec<Vec<f64>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let (code, scale, _) = run(bin().args(["scale", "eval", "--x", "1.2,2.5", "--format", "json", "--q", "1", "--model"]).arg(&m.cpp));
    assert_eq!(code, 0);
    let table: Value = serde_json::from_str(&scale).unwrap();
    let w = |i: usize| table[i]["w"].as_f64().unwrap();
    let expected = w(0) / w(1);
    assert!((rows[1][3] - expected).abs() < 1e-12 * expected);
}

#[test]
fn single_identity_is_json() {
    let m = models();
    let (code, out, _) = run(bin()
        .args(["identity", "eval", "--xi", r#"{"kind":"reflected","d":1.0}"#, "--which", "triple"])
        .args(["--b", "1", "--q", "1", "--v", "0.2", "--r", "-0.1", "--model"])
        .arg(&m.bm));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["value"].as_f64().unwrap() > 0.0);
    assert!(v["error_estimate"].as_f64().is_some());
    assert_eq!(v["params"]["v"], 0.2);
}

#[test]
fn degenerate_barrier_exits_with_validation_status() {
    let m = models();
    let (code, out, err) = run(bin()
        .args(["identity", "eval", "--which", "up-exit", "--b", "2"])
        .args(["--xi", r#"{"kind":"linear","slope":2.0,"d":1.0}"#, "--model"])
        .arg(&m.bm));
    assert_eq!(code, 2);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"]["code"], "drawdown-degenerate");
}

#[test]
fn missing_model_file_is_validation_error() {
    let (code, _, err) = run(bin().args(["scale", "eval", "--model", "/nonexistent/model.json"]));
    assert_eq!(code, 2);
    assert!(err.contains(r#""code":"input""#));
}

#[test]
fn creeping_without_gaussian_needs_flag() {
    let m = models();
    let base = |extra: &[&str]| {
        let mut c = bin();
        c.args(["identity", "eval", "--which", "creep", "--b", "1", "--xi", r#"{"kind":"constant","c":-1}"#])
            .args(extra)
            .arg("--model")
            .arg(&m.cpp);
        c
    };
    assert_eq!(run(&mut base(&[])).0, 2);
    let (code, out, _) = run(&mut base(&["--zero-creep-ok"]));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["value"], 0.0);
}

#[test]
fn mc_verify_requires_seed_and_reports_z_score() {
    let m = models();
    let args = ["mc", "verify", "--xi", r#"{"kind":"linear","slope":0.5,"d":1.0}"#, "--b", "1", "--paths", "500"];
    let (code, _, _) = run(bin().args(args).arg("--model").arg(&m.cpp));
    assert_eq!(code, 2);
    let (code, out, _) = run(bin().args(args).args(["--seed", "5", "--model"]).arg(&m.cpp));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    for key in ["formula_value", "mc_mean", "mc_se", "z_score", "dt_levels", "extrapolated"] {
        assert!(!v[key].is_null(), "{key}");
    }
    assert!(v["z_score"].as_f64().unwrap().abs() < 4.0);
}

#[test]
fn mc_verify_potential_bins() {
    let m = models();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let (code, out, _) = run(bin()
        .args(["mc", "verify", "--which", "potential", "--bins", "-1,-0.5,0,0.5,1"])
        .args(["--xi", r#"{"kind":"constant","c":-1}"#, "--b", "1", "--paths", "2000", "--seed", "2"])
        .args(["--dt", "4e-3", "--model"])
        .arg(&m.bm)
        .arg("--output")
        .arg(&path));
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["bins"].as_array().unwrap().len(), 4);
}

#[test]
fn compare_report_passes() {
    let (code, out, err) = run(bin().args(["compare-report"]));
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("check,value,reference,difference,tolerance,measure,status\n"));
    assert!(out.lines().skip(1).all(|l| l.ends_with(",pass")));
}
