use std::fs;
use std::path::Path;
use std::process::Command;

use sdg_ibm::app::config::ExperimentConfig;
use sdg_ibm::app::experiment::{run_experiment, RunStatus, Simulation};
use sdg_ibm::app::output::{AREA_HISTORY_HEADER, MARKERS_HEADER};
use sdg_ibm::ib::CurveKind;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdg-ibm"))
}

fn small_run(dir: &Path) -> std::process::Output {
    bin()
        .args(["run", "--experiment", "ellipse-static", "--N", "4", "--m", "32", "--K", "6", "--T", "0.06"])
        .args(["--snapshot-stride", "3", "--output"])
        .arg(dir)
        .output()
        .unwrap()
}

#[test]
fn run_writes_history_snapshots_and_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let out = small_run(tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let hist = fs::read_to_string(tmp.path().join("area_history.csv")).unwrap();
    let lines: Vec<&str> = hist.lines().collect();
    assert_eq!(lines[0], AREA_HISTORY_HEADER);
    assert_eq!(lines.len(), 1 + 7);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[3].parse::<f64>().unwrap(), 0.0);
    for step in [0, 3, 6] {
        let m = fs::read_to_string(tmp.path().join(format!("markers_{step}.csv"))).unwrap();
        assert!(m.starts_with(MARKERS_HEADER));
        assert_eq!(m.lines().count(), 1 + 32);
    }
    let meta = fs::read_to_string(tmp.path().join("run.meta")).unwrap();
    assert!(meta.contains("status = completed"));
    assert!(meta.contains("k0 = mu"));
}

#[test]
fn rerun_is_bit_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(small_run(a.path()).status.success());
    assert!(small_run(b.path()).status.success());
    for name in ["area_history.csv", "markers_0.csv", "markers_6.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# small balloon\nexperiment = balloon\nN = 4\nm = 16\nK = 2\nT = 0.02\nkappa = 2\n").unwrap();
    let out = bin().args(["run", "--config"]).arg(&cfg).args(["--kappa", "0.5"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("balloon") && text.contains("kappa=0.5"), "{text}");
}

#[test]
fn usage_errors_exit_with_code_two() {
    let bad = bin().args(["run", "--experiment", "ellipse-static", "--K", "10", "--dt", "0.01", "--T", "2"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let unknown = bin().args(["run", "--N", "0"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_summary_row_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--experiment", "ellipse-rotating", "--N", "4", "--m", "16,24", "--T", "0.04", "--dt", "0.02,0.01", "--output"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4);
    for i in 0..4 {
        assert!(tmp.path().join(format!("run_{i}")).join("area_history.csv").exists());
    }
}

#[test]
fn check_subcommand_passes() {
    let out = bin().args(["check", "--N", "4"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn stepping_matches_a_full_run() {
    let mut cfg = ExperimentConfig::new(CurveKind::StretchedCircle);
    cfg.n = 4;
    cfg.m = 24;
    cfg.steps = 4;
    cfg.t_final = 0.04;
    let full = run_experiment(&cfg).unwrap();
    let mut sim = Simulation::new(cfg).unwrap();
    let mut steps = 0;
    while sim.step() {
        steps += 1;
    }
    assert_eq!(steps + 1, 4);
    assert_eq!(sim.status(), Some(&RunStatus::Completed));
    assert_eq!(sim.record().records, full.records);
}
