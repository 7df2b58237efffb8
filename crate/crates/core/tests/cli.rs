use std::process::Command;

use qepi::cli::{RunConfig, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE};

fn qepi(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qepi")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["verify", "--lambda", "1.5"][..],
        &["verify", "--lambda", "0.5", "--kappa", "2"],
        &["verify", "--kappa", "0.5"],
        &["oracle", "--cutoff", "0"],
        &["verify", "--trials", "0"],
        &["figures", "--format", "json"],
        &["bogus"],
    ] {
        assert_eq!(qepi(args).0, EXIT_USAGE, "{args:?}");
    }
}

#[test]
fn help_exits_0() {
    assert_eq!(qepi(&["--help"]).0, EXIT_OK);
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "--trials", "200", "--seed", "7", "--kappa", "2"];
    let (code, first) = qepi(&args);
    assert_eq!(code, EXIT_OK);
    assert_eq!(qepi(&args).1, first);
    let (_, other) = qepi(&["verify", "--trials", "200", "--seed", "8", "--kappa", "2"]);
    assert_ne!(other, first);
}

#[test]
fn verify_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let p = path.to_str().unwrap();
    assert_eq!(qepi(&["verify", "--trials", "5", "--format", "csv", "--out", p]).0, EXIT_OK);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().count() > 1);
    assert!(dir.path().join("report.csv.meta.json").exists());
}

#[test]
fn oracle_cutoff_too_small_exits_3() {
    assert_eq!(qepi(&["oracle", "--n-bar", "2", "--cutoff", "8"]).0, EXIT_INFEASIBLE);
    assert_eq!(qepi(&["oracle", "--n-bar", "0", "--cutoff", "4"]).0, EXIT_OK);
}

#[test]
fn figures_write_csvs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qepi(&["figures", "--out", dir.path().to_str().unwrap()]).0, EXIT_OK);
    for name in ["delta_surface.csv", "moe_bounds.csv", "region.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let region = std::fs::read_to_string(dir.path().join("region.csv")).unwrap();
    assert!(region.starts_with("beta,R_B,R_C_conj,R_C_qepi,feasible"));
}

#[test]
fn parse_defaults() {
    let c = RunConfig::from_args(["qepi", "verify"]).unwrap();
    assert_eq!(c.trials, qepi::cli::DEFAULT_TRIALS);
    assert!(c.lambda.is_none() && c.kappa.is_none());
}
