//! Exit-code and configuration behavior of the experiment runner.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hieranderson"))
}

#[test]
fn config_violations_exit_two_with_one_line_each() {
    let out = bin()
        .args(["poisson", "--gamma", "-2", "--n", "1", "--out-dir", "/tmp/unused"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = stderr
        .lines()
        .filter(|l| l.starts_with("config error:"))
        .collect();
    assert_eq!(lines.len(), 2, "stderr was: {stderr}");
    assert!(stderr.contains("gamma"));
    assert!(stderr.contains("branching"));
}

#[test]
fn dense_volume_cap_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["poisson", "--k", "14"])
        .args(["--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max-dim"));
}

#[test]
fn infeasible_theta_is_reported_not_clamped() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["spectrum", "--k", "6", "--d", "2"])
        .args(["--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--theta"));
}

#[test]
fn threshold_violation_is_a_verdict_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["threshold", "--d", "2", "--k-list", "4,6,8"])
        .args(["--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("threshold/summary.json")).unwrap();
    assert!(summary.contains("threshold_violated"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("experiment.json");
    fs::write(&cfg_path, r#"{"gamma": 0.5, "k": 5, "d": 0.8}"#).unwrap();
    let out = bin()
        .args(["spectrum", "--config", cfg_path.to_str().unwrap()])
        .args(["--gamma", "1.0", "--theta", "0.5"])
        .args(["--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("spectrum/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["gamma"], 1.0); // flag wins
    assert_eq!(manifest["config"]["k"], 5); // file value kept
    assert_eq!(manifest["config"]["d"], 0.8);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("experiment.json");
    fs::write(&cfg_path, r#"{"gamma": 0.5, "volume": 12}"#).unwrap();
    let out = bin()
        .args(["spectrum", "--config", cfg_path.to_str().unwrap()])
        .args(["--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("volume"));
}

#[test]
fn spectrum_outputs_are_complete() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["spectrum", "--k", "5", "--seed", "7", "--name", "smoke"])
        .args(["--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let base = dir.path().join("smoke");
    let csv = fs::read_to_string(base.join("eigenvalues.csv")).unwrap();
    assert!(csv.starts_with("index,full,truncated"));
    assert_eq!(csv.lines().count(), 1 + 32);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(base.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["dim"], 32);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(base.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["artifact"], "hieranderson");
    assert_eq!(manifest["command"], "spectrum");
    // execution details are not part of the experiment identity
    assert!(manifest["config"].get("workers").is_none());
    assert!(manifest["config"].get("out_dir").is_none());
}

#[test]
fn hypothesis_h_csv_column_is_exact_for_flat_disorder() {
    // gamma = 0, theta = 1/2: every block carries mass 2^r, so the squared
    // share sum column must equal 2^(r−k) exactly, not approximately
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["hypothesis-h", "--gamma", "0", "--theta", "0.5", "--k-list", "8,10,12"])
        .args(["--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("hypothesis-h/conditions.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k_col = header.iter().position(|&h| h == "k").unwrap();
    let r_col = header.iter().position(|&h| h == "truncation_level").unwrap();
    let sq_col = header.iter().position(|&h| h == "squared_share_sum").unwrap();
    let mut seen = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let k: i32 = fields[k_col].parse().unwrap();
        let r: i32 = fields[r_col].parse().unwrap();
        let sq: f64 = fields[sq_col].parse().unwrap();
        assert_eq!(sq, 2f64.powi(r - k), "k={k}");
        seen += 1;
    }
    assert_eq!(seen, 3);
}

#[test]
fn gaussian_base_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["pure-random", "--base", "gaussian", "--k", "8", "--realizations", "300"])
        .args(["--seed", "11", "--out-dir", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("pure-random/summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["mean_within_3se"], true);
    assert!(summary["count_report"]["p_value"].as_f64().unwrap() > 0.001);
}

#[test]
fn runtime_failures_exit_three() {
    // an output root that cannot be created (below a file) is a runtime
    // error, not a config violation
    let out = bin()
        .args(["hypothesis-h", "--out-dir", "/dev/null/nested"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
