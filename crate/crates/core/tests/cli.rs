use std::path::Path;
use std::process::Command;

use sqe_core::snapshot::{SnapshotFile, HEADER_LEN};

fn sqe(out: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sqe"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn sqe")
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn wick_exp_at_zero_coupling_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqe(dir.path(), &["verify-wick", "--set", "alphas=0", "--set", "replicas=50"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.path().join("wick_exp.csv"));
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[2].parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn artifacts_carry_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "N = 1\nT = 0.02\noutput_every = 5\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sqe"))
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--set", "seed=9"])
        .env("SQE_OUT_DIR", dir.path().join("o"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("o/trajectory.csv")).unwrap();
    assert!(text.starts_with("# sqe "));
    assert!(text.contains("# seed = 9\n") && text.contains("# T = 0.02\n"));
    assert!(text.contains("# measure_digest = "));
    assert!(dir.path().join("o/trajectory.schema.csv").exists());
    assert!(dir.path().join("o/plot_simulate.py").exists());
    // initial state plus 20 / 5 recorded steps
    assert_eq!(data_rows(&dir.path().join("o/trajectory.csv")).len(), 5);
}

#[test]
fn snapshots_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqe(
        dir.path(),
        &["simulate", "--set", "N=1", "--set", "T=0.01", "--set", "output_every=5", "--set", "snapshots=true", "--set", "seed=3"],
    );
    assert!(out.status.success());
    let last = dir.path().join("snap_r0_00002.sqesnap");
    let snap = SnapshotFile::read(&last).unwrap();
    let m = snap.header.grid_size as usize;
    assert_eq!(std::fs::metadata(&last).unwrap().len() as usize, HEADER_LEN + 8 * m * m);
    assert_eq!(snap.header.seed, 3);
    assert_eq!(snap.header.n, 1);
    assert!((snap.header.time - 0.01).abs() < 1e-12);
    assert!(snap.values.iter().all(|v| v.is_finite()));
    assert!(!dir.path().join("snap_r0_00003.sqesnap").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| sqe(dir.path(), args).status.code();
    assert_eq!(code(&["simulate", "--set", "bogus=1"]), Some(2));
    assert_eq!(code(&["simulate", "--set", "dt=-1"]), Some(2));
    assert_eq!(code(&["simulate", "--set", "grid=4", "--set", "N=3"]), Some(2));
    assert_eq!(code(&["comparison", "--set", "measure=sinh"]), Some(2));
    assert_eq!(code(&["check", "--criteria", "42"]), Some(2));
    assert_eq!(code(&["no-such-command"]), Some(2));
    assert_eq!(
        code(&["invariance", "--set", "replicas=20", "--set", "measure=exp", "--set", "alpha=0.5", "--set", "mass=1", "--set", "atoms=0.5@40", "--set", "T=0.01"]),
        Some(3)
    );
    let file = dir.path().join("blocker");
    std::fs::write(&file, "").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sqe"))
        .arg("--out")
        .arg(file.join("sub"))
        .args(["sample-gff", "--set", "replicas=4", "--set", "N=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn check_flag_reports_failure() {
    let dir = tempfile::tempdir().unwrap();
    // S_N grows with N at A = 2
    let out = sqe(
        dir.path(),
        &["sn-decay", "--check", "--set", "A=2", "--set", "replicas=40", "--set", "n_max=3", "--set", "T=0.05", "--set", "epsilons=0.1", "--set", "bootstrap=40"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL sn-decay"));
}
