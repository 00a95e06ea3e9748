//! End-to-end tests of the command-line interface: outputs, exit codes,
//! golden formats and run-record replay.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hmcalc")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

fn write_smooth_config(dir: &Path, g: i64, d: i64) -> PathBuf {
    let path = dir.join(format!("cfg-s_g{g}_d{d}.json"));
    std::fs::write(&path, hmcalc::fixtures::cfg_s_text(g, d)).unwrap();
    path
}

#[test]
fn tables_command() {
    let out = run(&["tables", "--lmax", "3"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("r 2 1 1 3 = 1"));

    let out = run(&["tables", "--lmax", "4"]);
    assert!(stdout(&out).contains("r 2 1 2 4 = 2/3"));

    // Precondition violation is a usage error (exit 2).
    let out = run(&["tables", "--lmax", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tables_out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rt.txt");
    let piped = run(&["tables", "--lmax", "6"]);
    let out = run(&["tables", "--lmax", "6", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&piped));
}

#[test]
fn eval_integrates_classical_values() {
    let dir = tempfile::tempdir().unwrap();
    let word = "star:1:one;star:1:one;gamma;gamma";
    for (g, expected) in [(0i64, "2"), (1, "0"), (2, "-2")] {
        let cfg = write_smooth_config(dir.path(), g, 1);
        let out = run(&[
            "eval",
            "--config",
            cfg.to_str().unwrap(),
            "--word",
            word,
            "--integrate",
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        assert_eq!(stdout(&out).trim(), expected, "genus {g}");
    }
}

#[test]
fn eval_bare_gamma_annihilates_the_unit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_smooth_config(dir.path(), 0, 1);
    let out = run(&["eval", "--config", cfg.to_str().unwrap(), "--word", "gamma"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0");
}

#[test]
fn eval_emits_canonical_element_and_json() {
    let cfg = fixture("cfg-n1.json");
    let word = "star:1:one;star:1:one;gamma;gamma";
    let out = run(&["eval", "--config", cfg.to_str().unwrap(), "--word", word]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "-4 t2[x] + phi[2,1;theta]");

    let out = run(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--word",
        word,
        "--integrate",
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["element"], "-4 t2[x] + phi[2,1;theta]");
    assert_eq!(v["integral"], "0");
}

#[test]
fn eval_warns_on_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_smooth_config(dir.path(), 0, 1);
    // t_1[one]^2 is nonzero but off top degree, so the integral is 0.
    let out = run(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--word",
        "star:1:one;star:1:one",
        "--integrate",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0");
    assert!(stderr(&out).contains("dimension mismatch"));
}

#[test]
fn eval_rejects_invalid_config_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = hmcalc::fixtures::cfg_s_text(0, 1).replace(
        r#"{"a": "pt", "b": "pt", "val": []}"#,
        r#"{"a": "pt", "b": "pt", "val": [["1", "pt"]]}"#,
    );
    let path = dir.path().join("bad.json");
    std::fs::write(&path, bad).unwrap();
    let out = run(&[
        "eval",
        "--config",
        path.to_str().unwrap(),
        "--word",
        "gamma",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("degree-additivity"));
}

#[test]
fn eval_rejects_bad_word_usage() {
    // Missing required flags: clap usage error, exit 2.
    let out = run(&["eval", "--word", "gamma"]);
    assert_eq!(out.status.code(), Some(2));
    // Malformed word text: computation error, exit 1.
    let cfg = fixture("cfg-n1.json");
    let out = run(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--word",
        "star:zero:L",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn series_command_outputs() {
    let cfg = fixture("cfg-n1.json");
    // Zero orders: just the initial value.
    let out = run(&[
        "series",
        "--config",
        cfg.to_str().unwrap(),
        "--classes",
        "L",
        "--gamma-order",
        "0",
        "--mu-orders",
        "0",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["0|0"], "1");

    let out = run(&[
        "series",
        "--config",
        cfg.to_str().unwrap(),
        "--classes",
        "L",
        "--gamma-order",
        "1",
        "--mu-orders",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["1|0"], "0");
    assert_eq!(v["0|1"], "2 t1[f] + t1[x]");

    // Unknown class: computation error.
    let out = run(&[
        "series",
        "--config",
        cfg.to_str().unwrap(),
        "--classes",
        "nosuch",
        "--gamma-order",
        "0",
        "--mu-orders",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // Order cap guard.
    let out = run(&[
        "series",
        "--config",
        cfg.to_str().unwrap(),
        "--classes",
        "L",
        "--gamma-order",
        "40",
        "--mu-orders",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("max-order"));
}

#[test]
fn check_command_reports() {
    let out = run(&["check", "--suite", "rtable"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("PASS rtable"));

    let out = run(&["check", "--suite", "nilpotency", "--weight", "3"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let out = run(&["check", "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["check", "--suite", "rtable", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v[0]["passed"], true);
}

#[test]
fn run_record_replays_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("cfg-n2.json");
    let word = "star:2:one;gamma;gamma";
    let rec1 = dir.path().join("r1.json");
    let rec2 = dir.path().join("r2.json");
    let out1 = run(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--word",
        word,
        "--record",
        rec1.to_str().unwrap(),
    ]);
    let out2 = run(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--word",
        word,
        "--record",
        rec2.to_str().unwrap(),
    ]);
    assert!(out1.status.success() && out2.status.success());
    assert_eq!(stdout(&out1), stdout(&out2));
    let r1: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&rec1).unwrap()).unwrap();
    let r2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&rec2).unwrap()).unwrap();
    assert_eq!(r1["output"], r2["output"]);
    assert_eq!(r1["config_digest"], r2["config_digest"]);
    assert_eq!(r1["output"].as_str().unwrap(), stdout(&out1));
    assert_eq!(r1["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn combine_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_smooth_config(dir.path(), 0, 2);
    let table = dir.path().join("table.txt");
    std::fs::write(
        &table,
        "1 star:1:L;star:1:L\n-1/2 star:1:one;star:1:one;gamma;gamma\n",
    )
    .unwrap();
    let out = run(&[
        "combine",
        "--config",
        cfg.to_str().unwrap(),
        "--table",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "3");
}

#[test]
fn max_terms_guard_is_configurable() {
    let cfg = fixture("cfg-n1.json");
    let args = [
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--word",
        "star:1:L;star:1:L;star:1:L",
        "--max-terms",
        "1",
    ];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("term guard"));

    // The environment variable is honored when the flag is absent.
    let out = Command::new(bin())
        .args([
            "eval",
            "--config",
            cfg.to_str().unwrap(),
            "--word",
            "star:1:L;star:1:L;star:1:L",
        ])
        .env("HMCALC_MAX_TERMS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repo_fixture_files_match_generator() {
    // The shipped smooth-family files must agree with the generator used by
    // the check suites.
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for (g, d) in [(0i64, 1i64), (1, 1), (2, 1), (0, 2), (0, 3)] {
        let path = dir.join(format!("cfg-s_g{g}_d{d}.json"));
        let on_disk =
            std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing fixture {path:?}"));
        assert_eq!(on_disk, hmcalc::fixtures::cfg_s_text(g, d));
    }
}
