use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn cli(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_stablepoisson")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
    }
}

fn problem(dir: &Path, name: &str, surface: &str, field: &str, extra: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, format!("surface = \"{surface}\"\nfield = \"{field}\"\n{extra}")).unwrap();
    p
}

fn grid(n: usize) -> String {
    format!("[grid]\nn1 = {n}\nn2 = {n}\n")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_kind(r: &Run) -> (String, String) {
    assert_eq!(r.code, 2, "{}", r.stdout);
    let v = r.json();
    (
        v["error"]["stage"].as_str().unwrap().to_string(),
        v["error"]["kind"].as_str().unwrap().to_string(),
    )
}

#[test]
fn invariants_of_a_single_parallel() {
    let d = tempfile::tempdir().unwrap();
    let p = problem(d.path(), "a.toml", "sphere", "z-0.5", "");
    let r = cli(&["invariants", s(&p)]);
    assert_eq!(r.code, 0);
    let v = r.json();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["tool", "version", "input", "result", "warnings"]);
    let res = &v["result"];
    assert_eq!(res["n"], 1);
    assert!((res["periods"][0].as_f64().unwrap() - std::f64::consts::TAU).abs() < 1e-11);
    assert!((res["volume"].as_f64().unwrap() - 6.902_785).abs() < 1e-2);
    assert_eq!(res["topology"]["signs_code"], "+(-)");
    assert!(res["curves"][0].get("points").is_none());

    let with = cli(&["invariants", s(&p), "--curves"]).json();
    assert!(with["result"]["curves"][0]["points"].as_array().unwrap().len() > 100);
}

#[test]
fn input_errors_exit_with_status_two() {
    let d = tempfile::tempdir().unwrap();
    let z2 = problem(d.path(), "z2.toml", "sphere", "z^2", &grid(128));
    assert_eq!(error_kind(&cli(&["invariants", s(&z2)])), ("zero_set".into(), "NonRegularZero".into()));
    let q = problem(d.path(), "q.toml", "sphere", "q", "");
    assert_eq!(error_kind(&cli(&["invariants", s(&q)])).1, "UnknownVariable");
    let bad = problem(d.path(), "bad.toml", "sphere", "z", "colour = 3\n");
    assert_eq!(error_kind(&cli(&["invariants", s(&bad)])).1, "InvalidProblem");
    let missing = d.path().join("missing.toml");
    assert_eq!(error_kind(&cli(&["invariants", s(&missing)])).1, "Unreadable");
    assert_eq!(error_kind(&cli(&["frobnicate"])).1, "InvalidArguments");
}

#[test]
fn classify_verdicts() {
    let d = tempfile::tempdir().unwrap();
    let g = grid(256);
    let a = problem(d.path(), "a.toml", "sphere", "(z-0.5)*(z+0.5)", &g);
    let b = problem(d.path(), "b.toml", "sphere", "-(z-0.5)*(z+0.5)", &g);
    let r = cli(&["classify", s(&a), s(&a)]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["result"]["status"], "EQUIVALENT");

    let r = cli(&["classify", s(&a), s(&b), "--mode", "both"]);
    assert_eq!(r.code, 0);
    let v = r.json();
    assert_eq!(v["result"]["preserving"]["status"], "NOT_EQUIVALENT");
    assert_eq!(v["result"]["preserving"]["witness"]["invariant"], "topology");
    assert_eq!(v["result"]["reversing"]["status"], "EQUIVALENT");

    let t = problem(d.path(), "t.toml", "torus", "cos_u", &g);
    assert_eq!(error_kind(&cli(&["classify", s(&a), s(&t)])).1, "SurfaceMismatch");
}

#[test]
fn torus_classification_is_undecided_with_a_caveat() {
    let d = tempfile::tempdir().unwrap();
    let g = grid(128);
    let a = problem(d.path(), "a.toml", "torus", "cos_u", &g);
    let b = problem(d.path(), "b.toml", "torus", "cos_u*cos(0.4) - sin_u*sin(0.4)", &g);
    let v = cli(&["classify", s(&a), s(&b)]).json();
    assert_eq!(v["result"]["status"], "UNDECIDED");
    assert!(!v["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn normal_form_fields() {
    let f = |t: &str, v: &str| cli(&["normal-form", "--T", t, "--V", v]).json()["result"]["field"].clone();
    assert_eq!(f("6.283185307179586", "0"), "z");
    assert_eq!(f("3.141592653589793", "0"), "2*z");
    assert_eq!(error_kind(&cli(&["normal-form", "--T", "-1", "--V", "0"])).1, "InvalidParameter");
}

#[test]
fn tree_as_dot_and_json() {
    let d = tempfile::tempdir().unwrap();
    let p = problem(d.path(), "c.toml", "sphere", "(z-0.5)*z*(z+0.5)", &grid(128));
    let r = cli(&["tree", s(&p), "--dot"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("graph"), "{}", r.stdout);
    assert_eq!(r.stdout.matches("--").count(), 3);
    let v = cli(&["tree", s(&p)]).json();
    assert_eq!(v["result"]["is_tree"], true);
    assert_eq!(v["result"]["vertices"].as_array().unwrap().len(), 4);
}

#[test]
fn cohomology_counts() {
    let d = tempfile::tempdir().unwrap();
    let p = problem(d.path(), "two.toml", "sphere", "z^2 - 0.25", &grid(128));
    let v = cli(&["cohomology", s(&p)]).json();
    assert_eq!(v["result"]["n"], 2);
    assert_eq!(v["result"]["dims"], serde_json::json!([1, 2, 3]));
}

#[test]
fn deformations() {
    let d = tempfile::tempdir().unwrap();
    let g = grid(256);
    let p = problem(d.path(), "a.toml", "sphere", "z - 0.2", &g);
    let r = cli(&["deform", s(&p), "--mode", "volume", "--epsilon", "0.1"]);
    assert_eq!(r.code, 0);
    let v = r.json();
    let before = v["result"]["before"]["volume"].as_f64().unwrap();
    let after = v["result"]["after"]["volume"].as_f64().unwrap();
    assert!((before - 2.546_652).abs() < 1e-2, "{before}");
    assert!((after - 1.260_88).abs() < 1e-2, "{after}");
    assert_eq!(v["result"]["moved"]["periods"], serde_json::json!([false]));

    let near = problem(d.path(), "near.toml", "sphere", "z - 0.95", &g);
    let r = cli(&["deform", s(&near), "--mode", "volume", "--epsilon", "-0.1"]);
    assert_eq!(error_kind(&r), ("deform".into(), "TopologyChanged".into()));

    let z = problem(d.path(), "z.toml", "sphere", "z", &g);
    let v = cli(&["deform", s(&z), "--mode", "period", "--curve", "0", "--epsilon", "0.5"]).json();
    let t = v["result"]["after"]["periods"][0].as_f64().unwrap();
    assert!((t - std::f64::consts::TAU / 1.5).abs() < 1e-3 * t);
    assert_eq!(v["result"]["moved"]["volume"], false);
}
