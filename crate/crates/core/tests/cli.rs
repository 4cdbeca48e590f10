//! End-to-end checks of the `anon-cka` binary: exit codes and output shape.

use std::path::PathBuf;
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anon-cka")).args(args).output().unwrap()
}

fn with_config(cmd: &str, name: &str, extra: &[&str]) -> Output {
    let path = configs().join(format!("{name}.toml"));
    let mut args = vec![cmd, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

/// Writes `body` to a scratch file unique to this test.
fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("anon-cka-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn honest_run_exits_zero_with_key() {
    let out = with_config("run", "run_pure", &[]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["validated"], true);
    assert!(!v["key_bits"][0].as_str().unwrap().is_empty());
}

#[test]
fn ghz_minus_source_exits_two() {
    let out = with_config("run", "run_ghz_minus", &[]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["failed_verifications"], v["verification_rounds"]);
}

#[test]
fn withholding_run_reports_guess() {
    let out = with_config("run", "run_withholding", &[]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["adversary_key_guess"], v["key_bits"][0]);
}

#[test]
fn missing_receivers_exits_one() {
    let p = scratch("no_receivers.toml", "n = 4\nalice = 0\nL = 10\nD = 2\n");
    let out = run(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("receivers"));
}

#[test]
fn theorem1_rows_and_limits() {
    let out = with_config("theorem1", "theorem1", &["--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epsilon,accept_rate,stderr,bound,satisfied");
    assert_eq!(lines.len(), 1 + 9 + 5);
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));

    let empty = scratch("empty_grid.toml", "n = 4\nalice = 0\nreceivers = [1]\n[theorem1]\n");
    let out = run(&["theorem1", "--config", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(out.stdout, b"epsilon,accept_rate,stderr,bound,satisfied\n");

    let big = scratch("k11.toml", "n = 4\nalice = 0\nreceivers = [1]\n[theorem1]\nk = 11\ntheta_grid = [0.5]\n");
    let out = run(&["theorem1", "--config", big.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("size"));
}

#[test]
fn anonymity_commands() {
    let out = with_config("anonymity", "anonymity_ame", &[]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["below_threshold"], true);

    let out = with_config("anonymity", "anonymity_leaky", &[]);
    assert_eq!(out.status.code(), Some(2));

    let p = scratch(
        "alice_coalition.toml",
        "n = 4\nalice = 0\nreceivers = [1]\ntrials = 10\n[anonymity]\ncoalition = [0]\nhypothesis_b = { alice = 0, receivers = [2] }\n",
    );
    let out = run(&["anonymity", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn experiment_commands() {
    let out = with_config("experiment", "experiment", &["--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["reported_p_k"], 0.92974);
    assert_eq!(v["reported_p_v"], 0.87178);
    assert_eq!(v["configs"].as_array().unwrap().len(), 3);

    let perfect = scratch("f1.toml", "n = 4\nalice = 0\nreceivers = [1]\ntrials = 200\n[experiment]\nfidelity = 1.0\n");
    let out = run(&["experiment", "--config", perfect.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["p_k_avg"], 1.0);
    assert_eq!(v["p_v_avg"], 1.0);

    let floor = scratch("f005.toml", "n = 4\nalice = 0\nreceivers = [1]\n[experiment]\nfidelity = 0.05\n");
    let out = run(&["experiment", "--config", floor.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_flag_overrides_config() {
    let a = with_config("notify-demo", "notify_demo", &["--format", "csv"]);
    let b = with_config("notify-demo", "notify_demo", &["--format", "csv", "--seed", "21"]);
    let c = with_config("notify-demo", "notify_demo", &["--format", "csv", "--seed", "22"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn notify_demo_prints_tables() {
    let out = with_config("notify-demo", "notify_demo", &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("target P").count(), 4);
    assert!(text.contains("notified: [0, 3]"));
    assert!(text.contains("private bits sent: 80"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["run"]).status.code(), Some(1));
    assert_eq!(run(&["run", "--config", "/nonexistent.toml"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
