use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const GHZ: &str = r#"{"amps":[[0.7071067811865476,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0.7071067811865476,0]]}"#;

fn locc3(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locc3"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    assert!(out.stdout.is_empty());
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn ghz_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ghz.json", GHZ);
    let v = stdout_json(&locc3(&["invariants", &f]));
    assert!((v["I1"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["I4"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["I6"][0].as_f64().unwrap() - 1.0 / 32.0).abs() < 1e-12);
    assert_eq!(v["im6_sign"], "0");
}

#[test]
fn malformed_input_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.json", "{\n  \"amps\": [[1, 0],\n  oops\n}");
    let out = locc3(&["invariants", &f]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "ParseError");
    assert!(e["detail"].as_str().unwrap().contains("line 3"), "{e}");
}

#[test]
fn unnormalized_input_names_the_norm() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "un.json", r#"{"amps":[[1,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[1,0]]}"#);
    let out = locc3(&["invariants", &f]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "NotNormalized");
    assert!(e["detail"].as_str().unwrap().contains("1.414"), "{e}");
}

#[test]
fn ghz_to_real_trace() {
    let v = stdout_json(&locc3(&["protocol", "ghz2real", "--mu", "0.866", "--delta", "1.047", "--delta-prime", "0.785"]));
    let leaves = v["leaves"].as_array().unwrap();
    assert_eq!(leaves.len(), 8);
    for leaf in leaves {
        assert!(leaf["fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
    }
    assert_eq!(v["steps"].as_array().unwrap().len(), 3);
    // Kraus entries are [re, im] pairs
    assert_eq!(v["steps"][0]["kraus"][0][0][0].as_array().unwrap().len(), 2);
}

#[test]
fn ghz_to_complex_trace() {
    let v = stdout_json(&locc3(&[
        "protocol",
        "ghz2complex",
        "--delta",
        "0.4",
        "--delta-prime",
        "1.1",
        "--delta-double-prime",
        "0.8",
        "--first",
        "C",
    ]));
    assert_eq!(v["leaves"].as_array().unwrap().len(), 8);
    assert!(v["min_fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
}

#[test]
fn gate_find_on_real_state() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let s = state.to_str().unwrap();
    assert_ok(&locc3(&["random-state", "--ensemble", "ghz_class_real", "--seed", "11", "--out", s]));
    let v = stdout_json(&locc3(&["gate-find", s, "--party", "B"]));
    assert_eq!(v["party"], "B");
    assert!(v["alpha"].is_f64());
    assert!(v["residuals"]["max_abs"].as_f64().unwrap() <= 1e-9);
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn random_state_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert_ok(&locc3(&["random-state", "--seed", "7", "--out", p.to_str().unwrap()]));
    }
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let other = locc3(&["random-state", "--seed", "8"]);
    assert_ne!(other.stdout, a);
}

#[test]
fn verify_reports_are_byte_identical() {
    let args = ["verify", "real_gate", "--trials", "20", "--seed", "5"];
    let first = locc3(&args);
    let second = locc3(&args);
    let v = stdout_json(&first);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(v["campaign"], "real_gate");
    assert_eq!(v["trials"], 20);
}

#[test]
fn curve_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let s = state.to_str().unwrap();
    assert_ok(&locc3(&["random-state", "--ensemble", "ghz_class_real", "--seed", "2", "--out", s]));
    let out = locc3(&["curve", s, "--party", "A", "--lambda-max", "10", "--samples", "6"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "lambda,I1,I2,I3,I4,I5,ReOmega");
    assert_eq!(lines.len(), 7);
    let re: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(re.iter().all(|r| (r - re[0]).abs() <= 1e-8));
}

#[test]
fn chain_keeps_re_omega() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let s = state.to_str().unwrap();
    assert_ok(&locc3(&["random-state", "--ensemble", "ghz_class_complex", "--seed", "4", "--out", s]));
    let v = stdout_json(&locc3(&["chain", s, "--step", "A:2", "--step", "B:1.5"]));
    let re0 = v["initial_re_omega"].as_f64().unwrap();
    for step in v["trajectory"].as_array().unwrap() {
        assert!((step["re_omega"].as_f64().unwrap() - re0).abs() <= 1e-8);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ghz.json", GHZ);

    assert_eq!(locc3(&["--help"]).status.code(), Some(0));

    let usage = locc3(&["no-such-command"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(stderr_json(&usage)["error"], "UsageError");

    let csv = locc3(&["invariants", &f, "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(2));

    let missing = locc3(&["invariants", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(stderr_json(&missing)["error"], "IoError");

    let bad_spec = locc3(&["protocol", "ghz2real", "--mu", "0.3", "--delta", "1", "--delta-prime", "1"]);
    assert_eq!(bad_spec.status.code(), Some(2));

    let bad_tol = locc3(&["invariants", &f, "--tol-norm", "-1"]);
    assert_eq!(bad_tol.status.code(), Some(2));
}

#[test]
fn search_failures_exit_three() {
    // a near-projective λ makes every complex gate candidate give conjugate outcomes
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let s = state.to_str().unwrap();
    assert_ok(&locc3(&["random-state", "--ensemble", "ghz_class_complex", "--seed", "1", "--out", s]));
    let out = locc3(&["apply-povm", s, "--party", "A", "--lambda", "1e5"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["error"], "OnlyConjugateOrbitOutcomes");
}

#[test]
fn canon_of_ghz() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ghz.json", GHZ);
    let v = stdout_json(&locc3(&["canon", &f]));
    assert_eq!(v["class"], "ghz_class");
    assert_eq!(v["re_omega_subclass"], "zero");
    assert!((v["mu"].as_f64().unwrap() - v["nu"].as_f64().unwrap()).abs() < 1e-12);
    let c = stdout_json(&locc3(&["classify", &f]));
    assert_eq!(c["class"], "ghz_class");
}
