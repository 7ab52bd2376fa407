use std::path::Path;
use std::process::Command;

use campc_cli::{run_cli, BenchmarkConfig};

fn cli(out: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["campc".to_string(), format!("--out={}", out.display())];
    full.extend(args.iter().map(|s| s.to_string()));
    run_cli(full)
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"n_v": 20, "horizon_len": 5}"#).unwrap();
    assert!(BenchmarkConfig::load(&path).is_err());
    let code = cli(dir.path(), &["--config", path.to_str().unwrap(), "offline"]);
    assert_eq!(code, 1);

    std::fs::write(&path, r#"{"n_v": 20}"#).unwrap();
    let cfg = BenchmarkConfig::load(&path).unwrap();
    assert_eq!(cfg.n_v, 20);
    assert_eq!(cfg.horizon, BenchmarkConfig::default().horizon);
}

#[test]
fn invalid_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["offline", "--n-v", "2"]), 1);
    assert_eq!(cli(dir.path(), &["run", "--x0=1,2,3"]), 1);
    assert_eq!(cli(dir.path(), &["run", "--variants", "bogus"]), 1);
    assert_eq!(cli(dir.path(), &["no-such-command"]), 1);
}

#[test]
fn run_without_artifact_fails_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["run", "--n-v", "20", "--x0=0.4,0.04", "--steps", "5"]), 1);
}

#[test]
fn offline_artifact_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["offline", "--n-v", "20"]), 0);
    let first = std::fs::read(dir.path().join("offline.json")).unwrap();
    assert_eq!(cli(dir.path(), &["offline", "--n-v", "20"]), 0);
    let second = std::fs::read(dir.path().join("offline.json")).unwrap();
    assert_eq!(first, second);
    assert!(dir.path().join("offline.meta.json").exists());
}

#[test]
fn artifact_for_another_problem_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["offline", "--n-v", "20"]), 0);
    let code = cli(dir.path(), &["run", "--n-v", "24", "--x0=0.4,0.04", "--steps", "5", "--variants", "exact"]);
    assert_eq!(code, 1);

    // approx needs the increment fits the artifact was built with
    assert_eq!(cli(dir.path(), &["offline", "--n-v", "20", "--no-delta"]), 0);
    let code = cli(dir.path(), &["run", "--n-v", "20", "--x0=0.4,0.04", "--steps", "5", "--variants", "approx"]);
    assert_eq!(code, 1);
}

#[test]
fn run_writes_traces_and_comparisons() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["offline", "--n-v", "20"]), 0);
    let code = cli(
        dir.path(),
        &["run", "--n-v", "20", "--x0=0.4,0.04", "--steps", "15", "--variants", "full,exact,approx", "--verify-invariants"],
    );
    assert_eq!(code, 0);
    for v in ["full", "exact", "approx"] {
        let text = std::fs::read_to_string(dir.path().join(format!("trace_{v}.csv"))).unwrap();
        assert!(text.starts_with("# config "));
        assert!(text.contains(&format!("# variant {v}")));
        let rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 16, "header plus one row per step");
    }
    let s = summary(dir.path());
    assert_eq!(s["comparisons"]["exact_vs_full"]["equal"], true);
    assert!(s["comparisons"]["approx_vs_full"].is_object());
    assert!(s["problem_checksum"].is_string());
}

#[test]
fn comparisons_need_the_full_variant() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["offline", "--n-v", "20", "--no-delta"]), 0);
    let code = cli(dir.path(), &["run", "--n-v", "20", "--no-delta", "--x0=0.4,0.04", "--steps", "5", "--variants", "exact"]);
    assert_eq!(code, 0);
    let s = summary(dir.path());
    assert!(s.get("comparisons").is_none());
    assert!(s["variants"]["exact"].is_object());
}

#[test]
fn infeasible_initial_state_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["offline", "--n-v", "20", "--no-delta"]), 0);
    let code = cli(dir.path(), &["run", "--n-v", "20", "--no-delta", "--x0=-4,-0.4", "--steps", "5"]);
    assert_eq!(code, 3);
    assert!(!dir.path().join("trace_exact.csv").exists());
    let s = summary(dir.path());
    assert!(s["variants"]["exact"]["error"].is_string());
}

#[test]
fn sweep_rows_grow_with_n_v() {
    let dir = tempfile::tempdir().unwrap();
    let code = cli(dir.path(), &["sweep", "--sweep", "10,20", "--x0=0.4,0.04", "--steps", "4"]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let total = |r: &csv::StringRecord| r[1].parse::<usize>().unwrap();
    // two ellipses at each of the N - 1 free steps; terminal rows are fixed
    let horizon = BenchmarkConfig::default().horizon;
    assert_eq!(total(&rows[1]) - total(&rows[0]), 2 * 10 * (horizon - 1));
    assert!(rows.iter().all(|r| r[10].is_empty()));
}

#[test]
fn verify_detects_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["verify", "--cases", "10"]), 0);
    assert_eq!(cli(dir.path(), &["verify", "--cases", "30", "--inject-fault", "sign-flip"]), 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_campc");
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("offline"));
    let bad = Command::new(bin).arg("--definitely-not-a-flag").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
