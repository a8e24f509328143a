use sqe_core::cli::determinism_report;

#[test]
fn thread_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let scratch = dir.path().join("det");
    let report = determinism_report(11, &scratch).unwrap();
    assert_eq!(report.len(), 9);
    for (cmd, same) in report {
        assert!(same, "{cmd} differs between thread counts");
    }
    assert!(!scratch.exists());
}
