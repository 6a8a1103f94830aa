//! End-to-end runs of the `chlab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn chlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chlab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("CHLAB_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_writes_frozen_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n = 8\nm = 16\nT = 0.1\nseed = 3\nrecord = { stride = 8 }\n");
    let out = dir.path().join("out");
    let o = chlab(&out, &["--config", &cfg, "simulate"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("simulate.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,value"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    // Steps 0, 8, 16 recorded, nodes 0..=8 each.
    assert_eq!(rows.len(), 3 * 9);
    assert!(rows.iter().all(|r| r.len() == 3));
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[26][0] - 0.1).abs() < 1e-15);
    assert_eq!(rows[0][2], 0.0);
    assert!((rows[4][2] - 1.0).abs() < 1e-12, "u0 = sin at π/2");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("simulate.json")).unwrap()).unwrap();
    assert_eq!(json["command"], "simulate");
    assert_eq!(json["seed"], 3);
    assert_eq!(json["pass"], true);
    assert_eq!(json["config"]["n"], 8);
    assert_eq!(json["report"]["recorded_steps"], serde_json::json!([0, 8, 16]));
}

#[test]
fn seed_flag_overrides_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(chlab(&a, &["--seed", "5", "--threads", "1", "simulate"]).status.code(), Some(0));
    assert_eq!(chlab(&b, &["--seed", "5", "--threads", "3", "simulate"]).status.code(), Some(0));
    assert_eq!(chlab(&c, &["--seed", "6", "simulate"]).status.code(), Some(0));
    let read = |p: &Path| fs::read(p.join("simulate.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(fs::read(a.join("simulate.json")).unwrap(), fs::read(b.join("simulate.json")).unwrap());
}

#[test]
fn rate_study_with_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 8\nm = 8\nT = 0.1\n[rates_space]\nlevels = [2, 4, 8]\nreference = 16\nm = 32\nsamples = 50\n",
    );
    let out = dir.path().join("out");
    let o = chlab(&out, &["--config", &cfg, "rates-space"]);
    let code = o.status.code().unwrap();
    assert!(code == 0 || code == 2, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("rates-space: slope"), "{stdout}");
    let csv = fs::read_to_string(out.join("rates-space.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("level,error,std_error"));
    assert_eq!(csv.lines().count(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("rates-space.json")).unwrap()).unwrap();
    assert_eq!(json["report"]["samples"], 50);
    assert_eq!(json["pass"], code == 0);
}

#[test]
fn samples_flag_applies_to_every_study() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "n = 8\nm = 8\nT = 0.1\n[nondegeneracy]\nn = 8\nm = 8\n[malliavin]\nlevels = [4, 8, 16]\nreference = 32\nm = 8\n",
    );
    let out = dir.path().join("out");
    let o = chlab(&out, &["--config", &cfg, "--samples", "50", "malliavin"]);
    assert!(matches!(o.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&o.stderr));
    let hn = fs::read_to_string(out.join("malliavin-hnorm2.csv")).unwrap();
    assert_eq!(hn.lines().next(), Some("sample,hnorm2"));
    assert_eq!(hn.lines().count(), 51);
    assert!(out.join("malliavin.csv").exists());
}

#[test]
fn bad_config_exits_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n = 8\nm = 8\nT = 0.1\nbogus = 1\n");
    let o = chlab(&dir.path().join("out"), &["--config", &cfg, "simulate"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus") && err.contains("run.toml"), "{err}");
}

#[test]
fn invalid_arguments_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(chlab(dir.path(), &["nonsense"]).status.code(), Some(1));
    assert_eq!(chlab(dir.path(), &["--threads", "0", "simulate"]).status.code(), Some(1));
    let missing = dir.path().join("missing.toml");
    assert_eq!(chlab(dir.path(), &["--config", missing.to_str().unwrap(), "simulate"]).status.code(), Some(1));
}

#[test]
fn validate_command_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = chlab(dir.path(), &["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(dir.path().join("validate.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("check,value,tolerance,pass"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}
