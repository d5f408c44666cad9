use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn xxzctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xxzctl"))
        .args(args)
        .env_remove("XXZ_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn optimize_small(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "optimize",
        "--gate",
        "x",
        "--ns",
        "3",
        "--delta",
        "1.3",
        "--scheme",
        "xy",
        "--tf",
        "4",
        "--nt",
        "8",
        "--restarts",
        "3",
        "--max-iter",
        "60",
        "--seed",
        "5",
        "--out",
    ];
    args.push(out.to_str().unwrap());
    args.extend_from_slice(extra);
    xxzctl(&args)
}

fn stored_fidelity(path: &Path) -> f64 {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v["fidelity"].as_f64().unwrap()
}

#[test]
fn missing_gate_is_a_usage_error() {
    let o = xxzctl(&[
        "optimize", "--ns", "3", "--delta", "5", "--scheme", "xy", "--tf", "12.2", "--nt", "26",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--gate"));
}

#[test]
fn odd_pulse_count_with_alternating_scheme_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = xxzctl(&[
        "optimize",
        "--gate",
        "x",
        "--delta",
        "1",
        "--tf",
        "3",
        "--nt",
        "3",
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn liedim_reports_dimensions() {
    let o = xxzctl(&["liedim", "--ns", "3", "--delta", "1.2", "--controls", "xy"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("dimension 63 / 63: completely controllable"));

    let o = xxzctl(&["liedim", "--ns", "3", "--delta", "1.0", "--controls", "x"]);
    assert!(stdout(&o).contains("dimension 18 / 63"));

    let o = xxzctl(&["liedim", "--ns", "3", "--delta", "1.2", "--controls", "x"]);
    assert!(stdout(&o).contains("dimension 30 / 63: not completely controllable"));
}

#[test]
fn liedim_reachability_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lie.json");
    let o = xxzctl(&[
        "liedim",
        "--ns",
        "3",
        "--delta",
        "1.2",
        "--controls",
        "x",
        "--check-x-reachability",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("X_3 reachable with x control: true"));
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["dimension"], 30);
    assert_eq!(report["reachability"]["x_in_algebra"], true);
    assert!(dir.path().join("lie.json.manifest.json").exists());
}

#[test]
fn optimize_writes_result_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x3.json");
    let o = optimize_small(&out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("best fidelity"));

    let result: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(result["seed"], 5);
    assert_eq!(result["sequence"]["amplitudes"].as_array().unwrap().len(), 8);
    assert_eq!(result["per_restart_fidelities"].as_array().unwrap().len(), 3);

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("x3.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "optimize");
    assert_eq!(manifest["rng_seed"], 5);
    assert_eq!(manifest["config"]["nt"], 8);
    assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn require_threshold_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = optimize_small(&dir.path().join("a.json"), &["--require", "0.999999"]);
    assert_eq!(o.status.code(), Some(2));
    let o = optimize_small(&dir.path().join("b.json"), &["--require", "0.0"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(optimize_small(&a, &["--threads", "1"]).status.success());
    assert!(optimize_small(&b, &["--threads", "4"]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    assert!(optimize_small(&first, &[]).status.success());
    let again = dir.path().join("again.json");
    let o = xxzctl(&[
        "replay",
        dir.path().join("first.json.manifest.json").to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn config_file_mode_accepts_flag_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("lie.json");
    let text = serde_json::json!({
        "command": "liedim",
        "config": {"ns": 2, "delta": 0.7, "controls": "xz", "out": out}
    });
    fs::write(&cfg, text.to_string()).unwrap();
    let o = xxzctl(&["replay", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("dimension 15 / 15"));
    assert!(out.exists());
}

#[test]
fn robustness_and_risetime_on_a_stored_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("x3.json");
    assert!(optimize_small(&seq, &[]).status.success());
    let ideal = stored_fidelity(&seq);

    let csv = dir.path().join("noise.csv");
    let o = xxzctl(&[
        "robustness",
        "--sequence",
        seq.to_str().unwrap(),
        "--delta-noise-list",
        "0,0.5",
        "--samples",
        "20",
        "--seed",
        "11",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delta_noise,mean,std,stderr,n"));
    let zero: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(zero[1].parse::<f64>().unwrap(), ideal);
    assert!(dir.path().join("noise.csv.manifest.json").exists());

    let csv = dir.path().join("rise.csv");
    let o = xxzctl(&[
        "risetime",
        "--sequence",
        seq.to_str().unwrap(),
        "--tau-list",
        "0",
        "--substeps",
        "64",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert!((row[1].parse::<f64>().unwrap() - ideal).abs() < 1e-9);
}

#[test]
fn unreadable_sequence_file_fails() {
    let o = xxzctl(&[
        "robustness",
        "--sequence",
        "/nonexistent/seq.json",
        "--delta-noise-list",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_xxzctl"))
        .args([
            "ladder",
            "--gate",
            "x",
            "--delta",
            "1.3",
            "--scheme",
            "x",
            "--tf",
            "3",
            "--nt-list",
            "2,4",
        ])
        .args(["--restarts", "2", "--max-iter", "30", "--warm-start"])
        .env("XXZ_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("ladder_x_delta1.3_tf3.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("n_t,fidelity\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn scan_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let o = xxzctl(&[
        "scan",
        "--gate",
        "sqrtswap",
        "--scheme",
        "xy",
        "--delta-list",
        "1.0,2.0",
        "--tf-range",
        "0.5:0.7:0.1",
        "--restarts",
        "2",
        "--max-iter",
        "40",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("delta,t_f,n_t,fidelity\n"));
    assert_eq!(text.lines().count(), 7);

    let o = xxzctl(&["scan", "--gate", "x", "--delta-list", "1", "--tf-range", "1:0.5"]);
    assert_eq!(o.status.code(), Some(1));
}
