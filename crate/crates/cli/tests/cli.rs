use std::path::Path;
use std::process::{Command, Output};

fn qbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbc")).args(args).output().expect("spawn qbc")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const KENT: &str = r#"{
  "protocol": "kent", "alice": "attack",
  "kent": {"total_photons": 8, "retained_photons": 4, "commitment_width": 2},
  "trials": 5, "base_seed": 7, "open_bit_policy": "coin_after_commit"
}"#;

#[test]
fn run_writes_csv_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), KENT);
    let out = dir.path().join("r.csv");
    let o = qbc(&["run", "--config", &cfg, "--trials", "3", "--seed", "40", "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed,test_verdict,opened_bit,open_verdict,decoded_bit");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("40,pass,"));
    assert!(lines[3].starts_with("42,"));
}

#[test]
fn run_prints_json_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), KENT);
    let o = qbc(&["run", "--config", &cfg]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["aggregate"]["open_acceptance_rate"], 1.0);
}

#[test]
fn probe_prints_a_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"protocol":"bb84","alice":"honest","photons":2,"trials":1,"base_seed":0,"open_bit_policy":"fixed0"}"#,
    );
    let o = qbc(&["probe", "--config", &cfg]);
    assert!(o.status.success());
    let d: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!(d.abs() <= 1e-12);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &KENT.replace("\"trials\": 5", "\"trials\": 0"));
    let o = qbc(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));

    let cfg = write_config(dir.path(), KENT);
    assert_eq!(qbc(&["run", "--config", &cfg, "--format", "csv"]).status.code(), Some(2));
    assert_eq!(qbc(&["run", "--config", &cfg, "--bogus"]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(qbc(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(3));
    let cfg = write_config(dir.path(), KENT);
    let bad_out = dir.path().join("no_such_dir").join("r.json");
    assert_eq!(qbc(&["run", "--config", &cfg, "--out", bad_out.to_str().unwrap()]).status.code(), Some(3));
}
