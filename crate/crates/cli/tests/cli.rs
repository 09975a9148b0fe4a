use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const COSINE: &str = r#"{"nu": 1, "builtin": "free", "potential": {"modes": [
    {"xi": [1.0], "amplitude_taylor": [[[0.25]]]},
    {"xi": [-1.0], "amplitude_taylor": [[[0.25]]]}
]}}"#;

fn problem(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatdeform")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn check<'a>(report: &'a Value, name: &str) -> Vec<&'a Value> {
    report["checks"].as_array().unwrap().iter().filter(|c| c["name"] == name).collect()
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn classical_free_problem_passes_with_small_residuals() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "free.json", r#"{"nu": 1, "builtin": "free"}"#);
    let out = dir.path().join("out");
    let o = run(&["classical", "--problem", p.to_str().unwrap(), "--t", "0.2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("report.json"));
    assert_eq!(report["pass"], true);
    for c in report["checks"].as_array().unwrap() {
        assert_eq!(c["status"], "PASS");
    }
    for name in ["eikonal", "momentum", "transport", "boundary_values", "symplectic"] {
        assert!(check(&report, name)[0]["value"].as_f64().unwrap() < 1e-8, "{name}");
    }
    assert!(check(&report, "p0_pde")[0]["value"].as_f64().unwrap() < 1e-6);
    for file in ["trajectories.csv", "action.csv", "theta.csv"] {
        assert!(fs::read_to_string(out.join(file)).unwrap().lines().count() > 1);
    }
}

#[test]
fn classical_magnetic_trajectories_match_closed_forms() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "magnetic.json", r#"{"nu": 2, "builtin": {"magnetic": [[0, 1], [-1, 0]]}}"#);
    let out = dir.path().join("out");
    let o = run(&["classical", "--problem", p.to_str().unwrap(), "--t", "0.3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&out.join("report.json"));
    let closed = check(&report, "closed_form_trajectories");
    assert_eq!(closed.len(), 1);
    assert_eq!(closed[0]["status"], "PASS");
}

#[test]
fn focal_time_exits_with_radius_code() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "harmonic.json", r#"{"nu": 1, "builtin": {"harmonic": 4.0}}"#);
    let out = dir.path().join("out");
    let o = run(&["classical", "--problem", p.to_str().unwrap(), "--t", "0.7853981633974483i", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let report = json(&out.join("report.json"));
    assert_eq!(report["error"]["kind"], "focal_point");
    assert!(report["error"]["conditioning"].as_f64().unwrap() > 1e8);
}

#[test]
fn time_outside_validity_radius_exits_with_radius_code() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "free.json", r#"{"nu": 1, "builtin": "free", "validity_radius": 0.5}"#);
    let out = dir.path().join("out");
    let o = run(&["kernel", "--problem", p.to_str().unwrap(), "--t", "0.8", "--xy", "0:0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&out.join("kernel.json"))["error"]["kind"], "out_of_radius");
}

#[test]
fn kernel_of_zero_potential_is_the_unperturbed_kernel() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "free.json", r#"{"nu": 1, "builtin": {"harmonic": 1.0}}"#);
    let out = dir.path().join("out");
    let o = run(&["kernel", "--problem", p.to_str().unwrap(), "--t", "0.2,0.1i", "--xy", "grid:-1:1:3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report = json(&out.join("kernel.json"));
    let records = report["records"].as_array().unwrap();
    assert_eq!(records.len(), 18);
    for r in records {
        assert_eq!(complex(&r["pconj"][0][0]), (1.0, 0.0));
        assert_eq!(complex(&r["p"][0][0]), complex(&r["p0"]));
        assert_eq!(r["tail_bound"], 0.0);
    }
}

#[test]
fn kernel_of_constant_potential_is_the_gauge_factor() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "constant.json", r#"{"nu": 1, "builtin": "free", "potential": {"modes": [{"xi": [0.0], "amplitude_taylor": [[[0.5]]]}]}}"#);
    let out = dir.path().join("out");
    let o = run(&["kernel", "--problem", p.to_str().unwrap(), "--t", "0.2", "--xy", "0.3:-0.1", "--nmax", "12", "--tol", "1e-12", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = &json(&out.join("kernel.json"))["records"][0];
    let (p0, _) = complex(&r["p0"]);
    let (p, _) = complex(&r["p"][0][0]);
    assert!((p - p0 * 0.1f64.exp()).abs() < 1e-12 * p0);
    assert_eq!(r["converged"], true);
}

#[test]
fn kernel_cosine_batch_converges() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "cos.json", COSINE);
    let out = dir.path().join("out");
    let o = run(&["kernel", "--problem", p.to_str().unwrap(), "--t", "0.02,0.01+0.01i", "--xy", "0.1:-0.1;0:0.05", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let report = json(&out.join("kernel.json"));
    for r in report["records"].as_array().unwrap() {
        assert!(r["tail_bound"].as_f64().unwrap() < 1e-8);
        assert_eq!(r["converged"], true);
    }
    let terms = fs::read_to_string(out.join("terms.csv")).unwrap();
    assert!(terms.starts_with("t_re,t_im,point,n,abs_vn,tail_bound\n"));
}

#[test]
fn budget_overrun_is_a_configuration_error() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "cos.json", COSINE);
    let out = dir.path().join("out");
    let o = run(&["kernel", "--problem", p.to_str().unwrap(), "--t", "0.2", "--xy", "1:-1", "--tol", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn verify_free_cosine_suite_passes() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "cos.json", COSINE);
    let out = dir.path().join("out");
    let o = run(&["verify", "--problem", p.to_str().unwrap(), "--t", "0.2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&out.join("report.json"));
    assert_eq!(report["pass"], true);
    assert_eq!(check(&report, "pde_residual")[0]["status"], "PASS");
}

#[test]
fn verify_reports_reality_failure_and_skips_positivity() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "complex.json", r#"{"nu": 1, "C": {"taylor": [[[[0.5, 0.3]]]]}}"#);
    let out = dir.path().join("out");
    let o = run(&["verify", "--problem", p.to_str().unwrap(), "--t", "0.2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    let report = json(&out.join("report.json"));
    assert_eq!(check(&report, "reality")[0]["status"], "FAIL");
    let positivity = check(&report, "positivity");
    assert_eq!(positivity[0]["status"], "SKIPPED");
    assert!(positivity[0]["detail"].as_str().unwrap().contains("reality"));
}

#[test]
fn verify_magnetic_propagator_jump_passes() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "magnetic.json", r#"{"nu": 2, "builtin": {"magnetic": [[0, 1], [-1, 0]]}}"#);
    let out = dir.path().join("out");
    let o = run(&["verify", "--problem", p.to_str().unwrap(), "--t", "0.25i", "--out", out.to_str().unwrap()]);
    let report = json(&out.join("report.json"));
    assert_eq!(check(&report, "propagator_jump")[0]["status"], "PASS");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "cos.json", COSINE);
    let mut texts = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let o = run(&["verify", "--problem", p.to_str().unwrap(), "--t", "0.1i", "--seed", "5", "--nmax", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        texts.push(fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let good = problem(&dir, "free.json", r#"{"nu": 1, "builtin": "free"}"#);
    let bad = problem(&dir, "bad.json", r#"{"nu": 1, "builtin": "free", "extra": 1}"#);
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let missing = dir.path().join("missing.json");
    for args in [
        vec!["classical", "--problem", bad.to_str().unwrap(), "--out", out],
        vec!["classical", "--problem", missing.to_str().unwrap(), "--out", out],
        vec!["classical", "--problem", good.to_str().unwrap(), "--t", "abc", "--out", out],
        vec!["kernel", "--problem", good.to_str().unwrap(), "--xy", "1", "--out", out],
        vec!["kernel", "--problem", good.to_str().unwrap(), "--nmax", "0", "--out", out],
        vec!["kernel", "--problem", good.to_str().unwrap(), "--t", "-0.2", "--xy", "0:0", "--out", out],
        vec!["verify", "--no-such-flag"],
    ] {
        assert_eq!(code(&run(&args)), 2, "{args:?}");
    }
}
