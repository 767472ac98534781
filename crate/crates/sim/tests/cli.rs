//! Command-line behavior, driven through the real binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn epimpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epimpc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("epimpc-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn missing_config_file_fails_and_names_the_path() {
    let out = epimpc(&["simulate", "--config", "/no/such/file.cfg", "--seed", "1"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/no/such/file.cfg"), "stderr: {stderr}");
}

#[test]
fn missing_seed_fails_with_diagnostic() {
    let out = epimpc(&["density", "--config", "demo"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("seed"), "stderr: {stderr}");
}

#[test]
fn bad_config_line_reports_the_key() {
    let dir = temp_dir("badcfg");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.cfg");
    std::fs::write(&path, "citizens = banana\n").unwrap();
    let out = epimpc(&["simulate", "--config", path.to_str().unwrap(), "--seed", "1"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("citizens"), "stderr: {stderr}");
}

#[test]
fn verify_range_exits_zero() {
    let out = epimpc(&["verify", "--seed", "1..3"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("verify seed 1: ok"));
    assert!(stdout.contains("verify seed 3: ok"));
    assert!(stdout.contains("all oracle suites passed"));
}

#[test]
fn density_and_trace_single_pipelines_run() {
    let dir = temp_dir("density");
    let out = epimpc(&[
        "density",
        "--config",
        "demo",
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(dir.join("density.csv").exists());
    assert!(dir.join("transcript.log").exists());

    let dir = temp_dir("trace");
    let out = epimpc(&[
        "trace",
        "--config",
        "demo",
        "--seed",
        "3",
        "--suggestion",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(dir.join("notifications.csv").exists());
}

#[test]
fn attack_subcommand_writes_report() {
    let dir = temp_dir("attack");
    let out = epimpc(&[
        "attack",
        "--scenario",
        "single-token-attack-s2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"attack_succeeded\": false"));
    assert!(dir.join("attack_single-token-attack-s2.json").exists());

    let out = epimpc(&["attack", "--scenario", "nonsense"]);
    assert!(!out.status.success());
}

#[test]
fn json_format_writes_json_outputs() {
    let dir = temp_dir("json");
    let out = epimpc(&[
        "simulate",
        "--config",
        "demo",
        "--seed",
        "9",
        "--format",
        "json",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for name in [
        "density.json",
        "notifications.json",
        "infection_histogram.json",
        "timeline.json",
        "report.json",
        "transcript.log",
    ] {
        assert!(dir.join(name).exists(), "{name} missing");
    }
    // JSON outputs parse.
    let text = std::fs::read_to_string(dir.join("density.json")).unwrap();
    serde_json::from_str::<serde_json::Value>(&text).unwrap();
}

#[test]
fn resume_with_wrong_seed_is_rejected() {
    let dir = temp_dir("resume-guard");
    let out = epimpc(&[
        "simulate",
        "--config",
        "demo",
        "--seed",
        "5",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let snapshot = dir.join("snapshot_epoch_240.json");
    assert!(snapshot.exists());
    let out = epimpc(&[
        "simulate",
        "--config",
        "demo",
        "--seed",
        "6",
        "--out",
        temp_dir("resume-guard-2").to_str().unwrap(),
        "--resume",
        snapshot.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("seed"), "stderr: {stderr}");
}
