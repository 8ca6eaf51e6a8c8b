use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const KEY: &str = "000102030405060708090a0b0c0d0e0f";

fn acf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acf"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn acf")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Keyed config with margin 0.25 and k = 8, plus a fair two-token model.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(acf(
        p,
        &["keygen", "--out", "cfg.toml", "--k", "8", "--key-hex", KEY]
    )
    .status
    .success());
    fs::write(
        p.join("model.toml"),
        "kind = \"static\"\nprobs = [0.5, 0.5]\n",
    )
    .unwrap();
    let o = acf(
        p,
        &[
            "calibrate",
            "--config",
            "cfg.toml",
            "--model",
            "model.toml",
            "--steps",
            "200",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

#[test]
fn keygen_keys_are_fresh_and_overridable() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let a = stdout(&acf(p, &["keygen"]));
    let b = stdout(&acf(p, &["keygen"]));
    assert_ne!(a, b);
    let fixed = acf(p, &["keygen", "--out", "k.toml", "--key-hex", KEY]);
    assert_eq!(stdout(&fixed).trim(), KEY);
    let again = acf(p, &["keygen", "--key-hex", KEY]);
    assert_eq!(
        fs::read_to_string(p.join("k.toml")).unwrap(),
        stdout(&again)
    );
}

#[test]
fn encode_requires_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    acf(p, &["keygen", "--out", "cfg.toml", "--key-hex", KEY]);
    fs::write(
        p.join("model.toml"),
        "kind = \"static\"\nprobs = [0.5, 0.5]\n",
    )
    .unwrap();
    let o = acf(
        p,
        &[
            "encode",
            "--config",
            "cfg.toml",
            "--model",
            "model.toml",
            "--bits",
            "1",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("acf calibrate"));
}

#[test]
fn one_bit_record_has_block_length_tokens() {
    let dir = workspace();
    let o = acf(
        dir.path(),
        &[
            "encode",
            "--config",
            "cfg.toml",
            "--model",
            "model.toml",
            "--bits",
            "1",
        ],
    );
    let rec: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rec["tokens"].as_array().unwrap().len(), 45);
}

#[test]
fn encode_is_deterministic_and_round_trips() {
    let dir = workspace();
    let p = dir.path();
    let args = [
        "encode",
        "--config",
        "cfg.toml",
        "--model",
        "model.toml",
        "--bits",
        "10110",
    ];
    let a = stdout(&acf(p, &args));
    assert_eq!(a, stdout(&acf(p, &args)));
    fs::write(p.join("rec.json"), &a).unwrap();
    let o = acf(
        p,
        &["decode", "--config", "cfg.toml", "--input", "rec.json"],
    );
    assert!(o.status.success());
    let out: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(out["bits"], "10110");
    assert!(!stderr(&o).contains("warning"));
}

#[test]
fn empty_message_round_trip() {
    let dir = workspace();
    let p = dir.path();
    let o = acf(
        p,
        &[
            "encode",
            "--config",
            "cfg.toml",
            "--model",
            "model.toml",
            "--out",
            "rec.json",
        ],
    );
    assert!(o.status.success());
    let rec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("rec.json")).unwrap()).unwrap();
    assert!(rec["tokens"].as_array().unwrap().is_empty());
    let out = stdout(&acf(
        p,
        &["decode", "--config", "cfg.toml", "--input", "rec.json"],
    ));
    assert!(out.contains("\"bits\": \"\""));
}

#[test]
fn tampered_session_warns() {
    let dir = workspace();
    let p = dir.path();
    let rec = stdout(&acf(
        p,
        &[
            "encode",
            "--config",
            "cfg.toml",
            "--model",
            "model.toml",
            "--bits",
            "01100111",
        ],
    ));
    fs::write(
        p.join("bad.json"),
        rec.replace("\"session-0\"", "\"session-9\""),
    )
    .unwrap();
    let o = acf(
        p,
        &["decode", "--config", "cfg.toml", "--input", "bad.json"],
    );
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
}

#[test]
fn decode_rejects_model_and_state_flags() {
    let dir = workspace();
    let p = dir.path();
    fs::write(
        p.join("rec.json"),
        stdout(&acf(
            p,
            &["encode", "--config", "cfg.toml", "--model", "model.toml"],
        )),
    )
    .unwrap();
    for extra in [["--model", "model.toml"], ["--state", "state.json"]] {
        let mut args = vec!["decode", "--config", "cfg.toml", "--input", "rec.json"];
        args.extend(extra);
        assert_eq!(acf(p, &args).status.code(), Some(1), "{extra:?}");
    }
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let p = dir.path();
    assert_eq!(acf(p, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(acf(p, &["--help"]).status.code(), Some(0));
    assert_eq!(
        acf(
            p,
            &["decode", "--config", "missing.toml", "--input", "x.json"]
        )
        .status
        .code(),
        Some(3)
    );
    assert_eq!(
        acf(p, &["simulate", "--scenario", "no-such-suite"])
            .status
            .code(),
        Some(3)
    );
    fs::write(p.join("bad.toml"), "name = 3\n").unwrap();
    assert_eq!(
        acf(p, &["simulate", "--scenario", "bad.toml"])
            .status
            .code(),
        Some(1)
    );
}

const SUITE: &str = r#"
name = "tiny"

[[scenario]]
name = "acf-tiny"
method = "acf"
k = 4
trials = 4
bits_per_trial = 4
margin = 0.25
[scenario.model]
kind = "static"
probs = [0.5, 0.5]

[sweep]
deltas = [0, 2]
[sweep.base]
k = 4
trials = 3
bits_per_trial = 4
[sweep.base.model]
kind = "hash"
seed = "tiny"
vocab_size = 64
window = 8
mixing = 0.0
concentration = 20.0

[[expect]]
check = "range"
row = "acf-tiny"
metric = "ber"
min = 0.0
max = 0.0
"#;

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("suite.toml"), SUITE).unwrap();
    for fmt in ["csv", "json"] {
        let a = acf(
            p,
            &[
                "simulate",
                "--scenario",
                "suite.toml",
                "--out",
                "a",
                "--format",
                fmt,
                "--jobs",
                "2",
            ],
        );
        assert!(a.status.success(), "{}", stderr(&a));
        acf(
            p,
            &[
                "simulate",
                "--scenario",
                "suite.toml",
                "--out",
                "b",
                "--format",
                fmt,
            ],
        );
        let name = if fmt == "csv" {
            "report.csv"
        } else {
            "report.json"
        };
        let x = fs::read(p.join("a").join(name)).unwrap();
        assert_eq!(x, fs::read(p.join("b").join(name)).unwrap());
    }
    let csv = fs::read_to_string(p.join("a/report.csv")).unwrap();
    assert!(csv.starts_with(
        "scenario,method,k,entropy_mean,entropy_std,ber_mean,ber_std,eic,desync_rate"
    ));
    assert_eq!(
        fs::read_to_string(p.join("a/curve.csv"))
            .unwrap()
            .lines()
            .next(),
        Some("delta,acf,baseline")
    );
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("suite.toml"), SUITE).unwrap();
    let a = stdout(&acf(
        p,
        &[
            "simulate",
            "--scenario",
            "suite.toml",
            "--seed",
            "1",
            "--format",
            "json",
        ],
    ));
    let b = stdout(&acf(
        p,
        &[
            "simulate",
            "--scenario",
            "suite.toml",
            "--seed",
            "2",
            "--format",
            "json",
        ],
    ));
    assert_ne!(a, b);
}

#[test]
fn check_exit_status_follows_expectations() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("ok.toml"), SUITE).unwrap();
    let o = acf(p, &["check", "--scenario", "ok.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("PASS"));
    fs::write(
        p.join("fail.toml"),
        SUITE.replace("min = 0.0\nmax = 0.0", "min = 0.4\nmax = 0.6"),
    )
    .unwrap();
    let o = acf(p, &["check", "--scenario", "fail.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("FAIL"));
    assert_eq!(
        acf(p, &["simulate", "--scenario", "fail.toml", "--check"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("suite.toml"), SUITE).unwrap();
    let o = acf(
        p,
        &[
            "sweep",
            "--scenario",
            "suite.toml",
            "--out",
            "s",
            "--format",
            "json",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = acf(p, &["report", "--input", "s/report.json", "--out", "r"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = fs::read_to_string(p.join("r/curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
    let rows = fs::read_to_string(p.join("r/report.csv")).unwrap();
    assert!(rows.contains("baseline-d2") && !rows.contains("acf-tiny"));
}
