//! The command-line front end, driven in process.

use std::fs;

use dtdist::cli::run;
use dtdist::dense::DensePmf;
use dtdist::tree::DistTree;
use serde_json::Value;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("dtdist").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn records(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn without_clock(mut v: Value) -> Value {
    if let Some(o) = v.as_object_mut() {
        o.remove("elapsed_s");
    }
    v
}

#[test]
fn gen_writes_valid_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_str().unwrap();
    let (code, first, _) = call(&["gen", "--n", "10", "--depth", "3", "--seed", "7", "--out", path]);
    assert_eq!(code, 0);
    let (_, second, _) = call(&["gen", "--n", "10", "--depth", "3", "--seed", "7"]);
    assert_eq!(first, second);
    let tree: DistTree = serde_json::from_str(&fs::read_to_string(dir.path().join("tree.json")).unwrap()).unwrap();
    assert_eq!(tree.dim(), 10);
    assert!(tree.depth() <= 3);
    let dense: DensePmf = serde_json::from_str(&fs::read_to_string(dir.path().join("dense.json")).unwrap()).unwrap();
    assert_eq!(dense.table().len(), 1024);
    assert_eq!(fs::read_to_string(dir.path().join("results.jsonl")).unwrap(), first);
}

#[test]
fn learn_dist_is_reproducible_up_to_clock() {
    let args = ["learn-dist", "--oracle", "subcube", "--n", "6", "--depth", "2", "--eps", "0.2", "--tau", "0.2", "--seed", "3"];
    let (c1, a, _) = call(&args);
    let (c2, b, _) = call(&args);
    assert_eq!((c1, c2), (0, 0));
    let a: Vec<Value> = records(&a).into_iter().map(without_clock).collect();
    let b: Vec<Value> = records(&b).into_iter().map(without_clock).collect();
    assert_eq!(a, b);
}

#[test]
fn estimate_influence_on_e2_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e2.json");
    fs::write(&path, r#"{"n": 2, "table": [0.125, 0.25, 0.125, 0.5]}"#).unwrap();
    let p = path.to_str().unwrap();
    for (coord, exact) in [("0", 0.5), ("1", 0.25)] {
        let (code, out, err) = call(&["estimate-influence", "--oracle", "exact", "--dist", p, "--n", "2", "--depth", "1", "--coord", coord]);
        assert_eq!(code, 0, "{err}");
        let rec = &records(&out)[0];
        assert!((rec["value"].as_f64().unwrap() - exact).abs() <= 1e-12);
    }
    let (code, out, err) = call(&[
        "estimate-influence", "--oracle", "subcube", "--dist", p, "--n", "2", "--depth", "1", "--coord", "0", "--eps", "0.05", "--delta", "0.05",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!((records(&out)[0]["value"].as_f64().unwrap() - 0.5).abs() <= 0.05);
}

#[test]
fn verify_suites_pass() {
    for suite in ["inequalities", "builddt-optimal", "estimators"] {
        let (code, out, err) = call(&["verify", "--suite", suite, "--trials", "20"]);
        assert_eq!(code, 0, "{suite}: {err}");
        assert!(!out.is_empty());
    }
}

#[test]
fn lift_reports_leaves() {
    let (code, out, err) = call(&[
        "lift", "--oracle", "exact", "--learner", "majority", "--n", "6", "--depth", "1", "--eps", "0.3", "--delta", "0.2",
        "--target-class", "depth:0",
    ]);
    assert_eq!(code, 0, "{err}");
    let rec = &records(&out)[0];
    assert!(rec["leaves"].as_array().is_some());
    assert!(rec["sample_size"].as_u64().unwrap() > 0);
}

#[test]
fn bad_input_exit_codes() {
    assert_eq!(call(&["gen", "--eps", "2"]).0, 2);
    assert_eq!(call(&["learn-dist", "--n", "0"]).0, 2);
    assert_eq!(call(&["frobnicate"]).0, 2);
    let (code, _, err) = call(&["estimate-influence", "--dist", "/nonexistent/e2.json"]);
    assert_eq!(code, 2);
    assert!(err.contains("\"exit\":2"));
}
