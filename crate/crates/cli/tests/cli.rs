use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use eev_core::harness::RunConfig;
use eev_core::spectral::GridSpec;

fn eev(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eev"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env("EEV_OUTPUT_ROOT", root)
        .output()
        .expect("eev runs")
}

fn tiny(root: &Path) -> std::path::PathBuf {
    let mut cfg = RunConfig::default();
    cfg.grid = GridSpec::new(2, 32, 2.0 * PI);
    cfg.model.nu = 0.05;
    cfg.model.ensemble_size = 2;
    cfg.perturbation.k_min = 1;
    cfg.perturbation.k_max = 2;
    cfg.run.t_end = 0.5;
    cfg.output.dir = "tiny".into();
    let path = root.join("tiny.toml");
    std::fs::write(&path, cfg.to_toml_string()).unwrap();
    path
}

#[test]
fn run_then_report_regenerates_tables() {
    let root = tempfile::tempdir().unwrap();
    let cfg = tiny(root.path());
    let out = eev(&["run", "-c", cfg.to_str().unwrap()], root.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict="));
    let dir = root.path().join("tiny");
    let ledger = std::fs::read(dir.join("ledger.csv")).unwrap();
    let rep = eev(&["report", "--in", dir.to_str().unwrap()], root.path());
    assert!(rep.status.success(), "{}", String::from_utf8_lossy(&rep.stderr));
    assert_eq!(std::fs::read(dir.join("ledger.csv")).unwrap(), ledger);
}

#[test]
fn print_config_round_trips() {
    let root = tempfile::tempdir().unwrap();
    let cfg = tiny(root.path());
    let out = eev(&["run", "-c", cfg.to_str().unwrap(), "--seed", "7", "--print-config"], root.path());
    assert!(out.status.success());
    let back = RunConfig::from_toml_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(back.perturbation.seed, 7);
    assert_eq!(back.grid.n, 32);
}

#[test]
fn invalid_input_exits_with_code_two() {
    let root = tempfile::tempdir().unwrap();
    let bad = root.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\ndim = 5\n").unwrap();
    assert_eq!(eev(&["run", "-c", bad.to_str().unwrap()], root.path()).status.code(), Some(2));
    let missing = root.path().join("nowhere");
    assert_eq!(eev(&["report", "--in", missing.to_str().unwrap()], root.path()).status.code(), Some(2));
}
