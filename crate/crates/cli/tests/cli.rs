//! End-to-end tests of the `edmstress` binary through its file interfaces.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edmstress"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_byte_identical_files_per_seed() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.json");
    let b = path(&dir, "b.json");
    assert!(run(&["gen", "--n", "6", "--d", "2", "--seed", "5", "--out", s(&a)])
        .status
        .success());
    assert!(run(&["gen", "--n", "6", "--d", "2", "--seed", "5", "--out", s(&b)])
        .status
        .success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c = path(&dir, "c.json");
    assert!(run(&["gen", "--n", "6", "--d", "2", "--seed", "6", "--out", s(&c)])
        .status
        .success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn pipeline_minimize_certify_verify() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "inst.json");
    let report = path(&dir, "report.json");
    let cert = path(&dir, "cert.json");

    assert!(run(&["gen", "--n", "20", "--d", "1", "--seed", "0", "--out", s(&inst)])
        .status
        .success());

    let csv = path(&dir, "trace.csv");
    let out = run(&[
        "minimize",
        "--instance",
        s(&inst),
        "--starts",
        "24",
        "--seed",
        "1000",
        "--csv",
        s(&csv),
        "--out",
        s(&report),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("LNGM_CANDIDATE"), "summary: {stdout}");
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("start,iteration,f,grad_norm,radius\n"));
    assert!(csv_text.lines().count() > 2);

    let out = run(&[
        "certify",
        "--instance",
        s(&inst),
        "--from-report",
        s(&report),
        "--out",
        s(&cert),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(String::from_utf8(out.stdout).unwrap().contains("CERTIFIED"));

    // re-verification reproduces the verdict
    let out = run(&["certify", "--instance", s(&inst), "--verify", s(&cert)]);
    assert_eq!(out.status.code(), Some(0));

    // verification against a different instance is rejected
    let other = path(&dir, "other.json");
    assert!(run(&["gen", "--n", "20", "--d", "1", "--seed", "1", "--out", s(&other)])
        .status
        .success());
    let out = run(&["certify", "--instance", s(&other), "--verify", s(&cert)]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn collapsed_start_escapes_to_global() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "inst.json");
    let start = path(&dir, "start.json");
    let report = path(&dir, "report.json");
    assert!(run(&["gen", "--n", "2", "--d", "1", "--seed", "3", "--out", s(&inst)])
        .status
        .success());
    std::fs::write(&start, r#"{"formulation":"L","data":[[0.0]]}"#).unwrap();
    let out = run(&[
        "minimize",
        "--instance",
        s(&inst),
        "--start-file",
        s(&start),
        "--out",
        s(&report),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("GLOBAL: 1"));
}

#[test]
fn certify_maximizer_fails_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "inst.json");
    let point = path(&dir, "collapsed.json");
    let cert = path(&dir, "cert.json");
    assert!(run(&["gen", "--n", "5", "--d", "1", "--seed", "2", "--out", s(&inst)])
        .status
        .success());
    std::fs::write(&point, r#"{"formulation":"L","data":[[0.0],[0.0],[0.0],[0.0]]}"#).unwrap();
    let out = run(&[
        "certify",
        "--instance",
        s(&inst),
        "--point",
        s(&point),
        "--out",
        s(&cert),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAILED"));
}

#[test]
fn reduce_and_newton_round_trip() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "inst.json");
    let p_point = path(&dir, "p.json");
    let ell_point = path(&dir, "ell.json");
    let back = path(&dir, "back.json");
    let newton = path(&dir, "newton.json");

    assert!(run(&["gen", "--n", "4", "--d", "2", "--seed", "7", "--out", s(&inst)])
        .status
        .success());
    // arbitrary full configuration
    std::fs::write(
        &p_point,
        r#"{"formulation":"P","data":[[0.1,0.2],[1.0,-0.5],[-0.3,0.8],[0.4,0.1]]}"#,
    )
    .unwrap();
    assert!(run(&[
        "reduce", "--instance", s(&inst), "--point", s(&p_point), "--to", "ell", "--out",
        s(&ell_point)
    ])
    .status
    .success());
    let ell: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&ell_point).unwrap()).unwrap();
    assert_eq!(ell["formulation"], "ell");
    assert_eq!(ell["data"].as_array().unwrap().len(), 5); // tri_len(4, 2)
    assert!(ell.get("q").is_some());

    // lift back to L
    assert!(run(&[
        "reduce", "--instance", s(&inst), "--point", s(&ell_point), "--to", "L", "--out",
        s(&back)
    ])
    .status
    .success());

    // Newton refinement from the packed point writes an evaluation report
    let out = run(&[
        "newton",
        "--instance",
        s(&inst),
        "--point",
        s(&ell_point),
        "--steps",
        "30",
        "--refine",
        "--out",
        s(&newton),
    ]);
    assert!(out.status.success(), "{out:?}");
    let val: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&newton).unwrap()).unwrap();
    assert!(val["eval"]["f"].is_number());
    assert!(val["eval"]["grad_norm"].is_number());
    assert!(val["eval"]["lambda_min"].is_number());
    assert!(val["trajectory"].as_array().unwrap().len() >= 1);
}

#[test]
fn usage_errors_exit_with_two() {
    let out = run(&["check", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["gen", "--n", "1", "--d", "1", "--out", "/tmp/never.json"]);
    assert_eq!(out.status.code(), Some(2));

    // clap usage error
    let out = run(&["minimize"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_instance_is_rejected_with_named_invariant() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "bad.json");
    std::fs::write(
        &inst,
        r#"{"n":2,"d":1,"D":[[0.0,1.0],[2.0,0.0]],"seed":0}"#,
    )
    .unwrap();
    let report = path(&dir, "r.json");
    let out = run(&[
        "minimize",
        "--instance",
        s(&inst),
        "--starts",
        "1",
        "--out",
        s(&report),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("symmetry"), "stderr: {err}");
}

#[test]
fn check_suites_pass() {
    for suite in ["calculus", "equivalence"] {
        let out = run(&["check", "--suite", suite, "--seed", "1"]);
        assert_eq!(out.status.code(), Some(0), "suite {suite}: {out:?}");
    }
}
