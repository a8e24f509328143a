use std::ffi::CString;
use std::ptr;

use sqe_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { sqe_last_error(buf.as_mut_ptr().cast(), buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

#[test]
fn simulation_lifecycle() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { sqe_measure_sinh(1.0, &mut m) }, SqeStatus::Ok);
    let mut cfg = sqe_sim_config_default();
    cfg.n = 1;
    cfg.seed = 4;
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { sqe_simulation_new(m, &cfg, &mut sim) }, SqeStatus::Ok);
    assert_eq!(unsafe { sqe_simulation_step(sim, 10) }, SqeStatus::Ok);
    let t = unsafe { sqe_simulation_time(sim) };
    assert!((t - 10.0 * 1e-3).abs() < 1e-12, "{t}");
    let m2 = unsafe { sqe_simulation_grid_size(sim) };
    assert!(m2 >= 8);

    let mut small = vec![0.0; 3];
    assert_eq!(
        unsafe { sqe_simulation_copy_field(sim, small.as_mut_ptr(), small.len()) },
        SqeStatus::BufferTooSmall
    );
    assert!(last_error().contains("buffer"));
    let mut field = vec![f64::NAN; m2 * m2];
    assert_eq!(unsafe { sqe_simulation_copy_field(sim, field.as_mut_ptr(), field.len()) }, SqeStatus::Ok);
    assert!(field.iter().all(|v| v.is_finite()));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.sqesnap");
    let c = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { sqe_simulation_write_snapshot(sim, c.as_ptr()) }, SqeStatus::Ok);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], b"SQESNAP\0");
    assert_eq!(bytes.len(), 80 + 8 * m2 * m2);
    let stored: Vec<f64> = bytes[80..].chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    assert_eq!(stored, field);

    unsafe {
        sqe_simulation_free(sim);
        sqe_measure_free(m);
    }
}

#[test]
fn same_seed_same_field() {
    let run = || {
        let mut m = ptr::null_mut();
        let (a, w) = ([1.0, -0.5], [0.5, 0.25]);
        assert_eq!(unsafe { sqe_measure_atoms(0.0, a.as_ptr(), w.as_ptr(), 2, &mut m) }, SqeStatus::Ok);
        let mut cfg = sqe_sim_config_default();
        cfg.n = 1;
        cfg.decomposed = 1;
        let mut sim = ptr::null_mut();
        assert_eq!(unsafe { sqe_simulation_new(m, &cfg, &mut sim) }, SqeStatus::Ok);
        assert_eq!(unsafe { sqe_simulation_step(sim, 5) }, SqeStatus::Ok);
        let n = unsafe { sqe_simulation_grid_size(sim) };
        let mut f = vec![0.0; n * n];
        assert_eq!(unsafe { sqe_simulation_copy_field(sim, f.as_mut_ptr(), f.len()) }, SqeStatus::Ok);
        unsafe {
            sqe_simulation_free(sim);
            sqe_measure_free(m);
        }
        f
    };
    assert_eq!(run(), run());
}

#[test]
fn errors_are_reported() {
    let mut out = 0.0;
    assert_eq!(unsafe { sqe_renorm_constant(2.0, 1, ptr::null_mut()) }, SqeStatus::NullPointer);
    assert_eq!(unsafe { sqe_renorm_constant(0.5, 1, &mut out) }, SqeStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { sqe_last_error(ptr::null_mut(), 0) }, last_error().len());

    let mut m = ptr::null_mut();
    let (a, w) = ([1.0], [-1.0]);
    assert_eq!(unsafe { sqe_measure_atoms(0.0, a.as_ptr(), w.as_ptr(), 1, &mut m) }, SqeStatus::InvalidMeasure);
    assert!(m.is_null());

    assert_eq!(unsafe { sqe_measure_sinh(1.0, &mut m) }, SqeStatus::Ok);
    let mut cfg = sqe_sim_config_default();
    cfg.grid_size = 4;
    cfg.n = 3;
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { sqe_simulation_new(m, &cfg, &mut sim) }, SqeStatus::InvalidGrid);
    unsafe {
        sqe_measure_free(m);
        sqe_simulation_free(ptr::null_mut());
    }
}

#[test]
fn scalar_functions() {
    let mut c = 0.0;
    assert_eq!(unsafe { sqe_renorm_constant(2.0, 0, &mut c) }, SqeStatus::Ok);
    // radius 1: modes 0 and the four unit vectors
    let expected = (1.0 + 4.0 / 2.0) / (4.0 * std::f64::consts::PI.powi(2));
    assert!((c - expected).abs() < 1e-14);
    assert_eq!(sqe_hermite(2, 3.0, 2.0), 7.0);
    assert_eq!(sqe_hermite(3, 1.0, 1.0), -2.0);
    let mut v = f64::NAN;
    assert_eq!(unsafe { sqe_wick_exp_diff_norm_oracle(0.0, 2.0, 1, 0.5, 0, &mut v) }, SqeStatus::Ok);
    assert_eq!(v, 0.0);
    assert_eq!(unsafe { sqe_wick_exp_diff_norm_oracle(1.0, 2.0, 1, 0.5, 0, &mut v) }, SqeStatus::Ok);
    assert!(v > 0.0 && v.is_finite());
}
