use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

fn ddgp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddgp"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn solve_example() {
    let out = ddgp(&["solve", "--input", &path_str(&data("ex32.dgp"))]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["status"], "YES");
    assert_eq!(r["count"], 4);
    assert_eq!(r["complete"], true);
    assert_eq!(r["stats"]["a"], serde_json::json!([1, 1, 2, 2, 4]));
    assert!(r["max_residual"].as_f64().unwrap() < 1e-9);

    let fixed = json(&ddgp(&[
        "solve",
        "--input",
        &path_str(&data("ex32.dgp")),
        "--fix-mirror",
    ]));
    assert_eq!(fixed["count"], 2);
}

#[test]
fn first_leaf_mode_stops_early() {
    let r = json(&ddgp(&[
        "solve",
        "--input",
        &path_str(&data("dmdgp_n10_k3.dgp")),
        "--first",
    ]));
    assert_eq!(r["status"], "YES");
    assert_eq!(r["count"], 1);
    assert_eq!(r["complete"], false);
}

#[test]
fn degenerate_base_exits_one() {
    let out = ddgp(&["solve", "--input", &path_str(&data("ex21.dgp"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["status"], "DEGENERATE");
}

#[test]
fn parse_error_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dgp");
    std::fs::write(&bad, "dgp 3 2\ne 1 2 1\ne 1 3 x\n").unwrap();
    let out = ddgp(&["classify", "--input", &path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn missing_file_is_an_error() {
    let out = ddgp(&["solve", "--input", "/nonexistent/instance.dgp"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ddgp(&["solve"]).status.code(), Some(2));
    assert_eq!(ddgp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        ddgp(&["utopia", "--model", "sideways"]).status.code(),
        Some(2)
    );
}

#[test]
fn bad_budget_is_rejected() {
    let out = ddgp(&[
        "solve",
        "--input",
        &path_str(&data("dmdgp_n10_k3.dgp")),
        "--max-nodes",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("5"), "{err}");
}

#[test]
fn classify_and_order() {
    let r = json(&ddgp(&["classify", "--input", &path_str(&data("dmdgp_n10_k3.dgp"))]));
    assert_eq!(r["dmdgp"], true);
    assert_eq!(r["pruning_free"], true);

    let o = json(&ddgp(&["order", "--input", &path_str(&data("ex32.dgp"))]));
    assert_eq!(o["found"], true);
    assert_eq!(o["order"].as_array().unwrap().len(), 5);
}

#[test]
fn generate_solve_count_verify() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("g.dgp");
    let out = ddgp(&[
        "generate",
        "--n",
        "10",
        "--k",
        "2",
        "--class",
        "combinatorial",
        "--prune-prob",
        "0",
        "--seed",
        "12",
        "--output",
        &path_str(&inst),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sidecar = format!("{}.realization.json", path_str(&inst));
    assert!(Path::new(&sidecar).exists());

    let s = json(&ddgp(&["solve", "--input", &path_str(&inst)]));
    assert_eq!(s["count"], 256);

    let c = json(&ddgp(&["count", "--input", &path_str(&inst)]));
    assert_eq!(c["prediction"]["kind"], "ExactPowerOfTwo");
    assert_eq!(c["prediction"]["value"], 256);
    assert_eq!(c["enumerated"], 256);
    assert_eq!(c["match"], true);
    assert_eq!(c["recurrence"]["holds"], true);
    assert_eq!(c["recurrence"]["equality_checked"], true);

    let v = ddgp(&["verify", "--input", &path_str(&inst), "--realization", &sidecar]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(json(&v)["valid"], true);
}

#[test]
fn verify_rejects_wrong_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let wrong = dir.path().join("wrong.json");
    let mut x: Value = serde_json::from_str(
        &std::fs::read_to_string(data("dmdgp_n10_k3.realization.json")).unwrap(),
    )
    .unwrap();
    x["coords"][4][0] = serde_json::json!(x["coords"][4][0].as_f64().unwrap() + 0.5);
    std::fs::write(&wrong, x.to_string()).unwrap();
    let out = ddgp(&[
        "verify",
        "--input",
        &path_str(&data("dmdgp_n10_k3.dgp")),
        "--realization",
        &path_str(&wrong),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["valid"], false);
    assert!(r["max_relative_residual"].as_f64().unwrap() > 1e-6);
}

#[test]
fn utopia_report() {
    let out = ddgp(&["utopia", "--samples", "2000", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let c = &r["counts"];
    let total: u64 = ["zero", "one", "two", "degenerate"]
        .iter()
        .map(|k| c[*k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 2000);
}
