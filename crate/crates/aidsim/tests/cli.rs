//! The `aidsim` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aidsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aidsim")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn bundled_scenarios_are_valid() {
    let list = stdout(&aidsim(&["scenarios"]));
    let names: Vec<&str> = list.lines().collect();
    assert_eq!(names, ["base-cdi", "base-ddi", "cav-cdi", "cav-ddi", "rcut-confusion"]);
    for n in names {
        let o = aidsim(&["validate", "--scenario", n]);
        assert!(o.status.success(), "{n}: {}", stdout(&o));
        assert!(stdout(&o).starts_with("valid"));
    }
}

#[test]
fn out_of_range_mpr_names_field_and_bound() {
    let o = aidsim(&["validate", "--scenario", "base-ddi", "--set", "fleet.mpr=1.5"]);
    assert!(!o.status.success());
    let out = stdout(&o);
    assert!(out.contains("fleet.mpr") && out.contains("[0, 1]"), "{out}");
}

#[test]
fn every_violation_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[network]\nkind = \"ddi\"\n[fleet]\nmpr = 1.5\n[run]\nduration = 100.0\n").unwrap();
    let o = aidsim(&["validate", path.to_str().unwrap()]);
    assert!(!o.status.success());
    let out = stdout(&o);
    assert!(out.contains("fleet.mpr") && out.contains("run.duration"), "{out}");
}

#[test]
fn unknown_key_reports_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    fs::write(&path, "[network]\nkind = \"cdi\"\n[fleet.hv]\ntime_gapp = 1.2\n").unwrap();
    let o = aidsim(&["validate", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("fleet.hv.time_gapp"), "{}", stderr(&o));
}

#[test]
fn missing_kind_and_bad_sweep_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nokind.toml");
    fs::write(&path, "[fleet]\nmpr = 0.5\n").unwrap();
    let o = aidsim(&["validate", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("network.kind"));
    let out = dir.path().join("o");
    let o = aidsim(&["run", "--scenario", "base-ddi", "--sweep", "mpr=0,...", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("bad sweep"));
}

fn short_run(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--scenario",
        "ddi",
        "--seed",
        "42",
        "--set",
        "run.duration=900",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = aidsim(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    o
}

#[test]
fn run_writes_one_summary_row_per_replication() {
    let dir = tempfile::tempdir().unwrap();
    let o = short_run(dir.path(), &["--reps", "3"]);
    assert!(stdout(&o).contains("throughput vph"));
    let rows = csv_rows(&dir.path().join("summary.csv"));
    assert_eq!(rows.len(), 1 + 3);
    assert!(rows[0].starts_with("level,replication,seed,throughput_vph,delay_s"));
    for f in ["trips.csv", "bins.csv", "ci.csv", "report.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("trajectories.csv").exists());
    assert!(!dir.path().join("anova.csv").exists());
}

#[test]
fn outputs_are_byte_identical_across_reruns_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    short_run(a.path(), &["--reps", "2", "--sweep", "mpr=0,100", "--jobs", "1", "--trajectories", "on"]);
    short_run(b.path(), &["--reps", "2", "--sweep", "mpr=0,100", "--jobs", "3", "--trajectories", "on"]);
    for f in ["summary.csv", "trips.csv", "bins.csv", "ci.csv", "anova.csv", "trajectories.csv", "report.txt"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn confusion_sweep_writes_anova() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = aidsim(&[
        "run",
        "--scenario",
        "rcut_confusion",
        "--reps",
        "2",
        "--set",
        "run.duration=900",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("anova.csv"));
    assert_eq!(rows.len(), 1 + 5);
    assert!(rows[1].starts_with("delay_s,confusion=0,"));
    // 2 replications x 2 five-minute bins per level
    assert!(rows[1].contains(",4,"));
    let summary = csv_rows(&dir.path().join("summary.csv"));
    assert_eq!(summary.len(), 1 + 5 * 2);
}
