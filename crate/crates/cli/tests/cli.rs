//! End-to-end runs of the `igroup` binary: exit codes, report files,
//! determinism, and the JSON schema contract.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_igroup")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn load_report(out: &Path) -> Value {
    let text = std::fs::read_to_string(out.join("report.json")).expect("report.json written");
    serde_json::from_str(&text).expect("report parses")
}

#[test]
fn bundled_flip_config_passes() {
    let out = tempfile::tempdir().unwrap();
    let result = run_config(&configs_dir().join("m2_z2_flip.json"), out.path(), &[]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let report = load_report(out.path());
    assert_eq!(report["passed"], Value::Bool(true));
    assert_eq!(report["schema"], "igroup-report/1");
    assert!(out.path().join("report.txt").exists());
}

#[test]
fn fock_counterexample_is_a_passing_finding() {
    let out = tempfile::tempdir().unwrap();
    let result = run_config(
        &configs_dir().join("fock_counterexample.json"),
        out.path(),
        &[],
    );
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let report = load_report(out.path());
    assert_eq!(report["passed"], Value::Bool(true));
    let conclusion = report["findings"]["conclusion"].as_str().unwrap();
    assert!(
        conclusion.contains("no interaction group extends"),
        "conclusion was: {conclusion}"
    );
}

#[test]
fn non_square_matrix_exits_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{
            "scenario": "verify-interaction",
            "group": {"kind": "cyclic", "n": 2},
            "algebra": {"blocks": [2]},
            "maps": {"0": [[[1,0],[0,0]],[[0,0],[1,0]],[[0,0],[0,0]]]}
        }"#,
    )
    .unwrap();
    let result = run_config(&config, dir.path(), &[]);
    assert_eq!(result.status.code(), Some(2), "{result:?}");
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("maps.0"), "stderr was: {stderr}");
    assert!(stderr.contains("square"), "stderr was: {stderr}");
}

#[test]
fn missing_group_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"scenario": "word-identities"}"#).unwrap();
    let result = run_config(&config, dir.path(), &[]);
    assert_eq!(result.status.code(), Some(2), "{result:?}");
    assert!(String::from_utf8_lossy(&result.stderr).contains("group"));
}

#[test]
fn failing_laws_exit_one() {
    // The transpose is unital and positive but neither multiplicative on
    // its range's interaction partner nor Schwarz, so verification must
    // fail without being a config error.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("transpose.json");
    std::fs::write(
        &config,
        r#"{
            "scenario": "verify-interaction",
            "group": {"kind": "cyclic", "n": 2},
            "algebra": {"blocks": [2]},
            "maps": {
                "0": [
                    [[1,0],[0,0],[0,0],[0,0]],
                    [[0,0],[1,0],[0,0],[0,0]],
                    [[0,0],[0,0],[1,0],[0,0]],
                    [[0,0],[0,0],[0,0],[1,0]]
                ],
                "1": [
                    [[1,0],[0,0],[0,0],[0,0]],
                    [[0,0],[0,0],[1,0],[0,0]],
                    [[0,0],[1,0],[0,0],[0,0]],
                    [[0,0],[0,0],[0,0],[1,0]]
                ]
            }
        }"#,
    )
    .unwrap();
    let result = run_config(&config, dir.path(), &[]);
    assert_eq!(result.status.code(), Some(1), "{result:?}");
    let report = load_report(dir.path());
    assert_eq!(report["passed"], Value::Bool(false));
    let failed = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["passed"] == Value::Bool(false));
    assert!(failed);
}

#[test]
fn reports_are_deterministic_up_to_the_timestamp() {
    let config = configs_dir().join("gns_flip.json");
    let mut docs = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().unwrap();
        let result = run_config(&config, out.path(), &["--seed", "123"]);
        assert_eq!(result.status.code(), Some(0), "{result:?}");
        let mut report = load_report(out.path());
        report["generated-at"] = Value::from(0u64);
        docs.push(serde_json::to_string(&report).unwrap());
    }
    assert_eq!(docs[0], docs[1]);
}

#[test]
fn report_json_round_trips() {
    let out = tempfile::tempdir().unwrap();
    let result = run_config(&configs_dir().join("extend_adx.json"), out.path(), &[]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let report = load_report(out.path());
    let emitted = serde_json::to_string(&report).unwrap();
    let back: Value = serde_json::from_str(&emitted).unwrap();
    assert_eq!(report, back);
}

#[test]
fn format_flag_selects_outputs() {
    let out = tempfile::tempdir().unwrap();
    let result = run_config(
        &configs_dir().join("word_identities_s3.json"),
        out.path(),
        &["--format", "text"],
    );
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    assert!(out.path().join("report.txt").exists());
    assert!(!out.path().join("report.json").exists());
}
