//! C ABI over `sqe-core`.
//!
//! Every fallible call returns an [`SqeStatus`]; on failure the message is
//! kept per thread and read back with [`sqe_last_error`]. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sqe_core::dynamics::{RunConfig, Scheme, Simulation};
use sqe_core::gaussian::{hermite, renorm_constant, wick_exp_diff_norm_oracle};
use sqe_core::measure::{Atom, WeightedMeasure};
use sqe_core::snapshot::{SnapshotFile, SnapshotHeader};
use sqe_core::spectral::{inverse_transform, Grid, SpectralCutoff};
use sqe_core::SqeError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMeasure = 3,
    InvalidGrid = 4,
    NotOneSigned = 5,
    NumericAbort = 6,
    AcceptanceCollapse = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &SqeError) -> SqeStatus {
    match e {
        SqeError::InvalidMeasure(_) => SqeStatus::InvalidMeasure,
        SqeError::InvalidGrid(_) | SqeError::ModeExceedsNyquist(..) => SqeStatus::InvalidGrid,
        SqeError::NotOneSigned => SqeStatus::NotOneSigned,
        SqeError::NumericAbort { .. } => SqeStatus::NumericAbort,
        SqeError::AcceptanceCollapse { .. } => SqeStatus::AcceptanceCollapse,
        SqeError::Io(_) | SqeError::Snapshot { .. } => SqeStatus::Io,
        _ => SqeStatus::InvalidArgument,
    }
}

fn fail(status: SqeStatus, msg: impl Into<String>) -> SqeStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<SqeStatus, SqeError>) -> SqeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => {
            if s == SqeStatus::Ok {
                set_error(String::new());
            }
            s
        }
        Ok(Err(e)) => fail(status_of(&e), e.to_string()),
        Err(_) => fail(SqeStatus::Panic, "panic inside sqe"),
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return Ok(fail(SqeStatus::NullPointer, concat!("`", stringify!($p), "` is null")));
        })+
    };
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// excluding the terminator. `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sqe_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: caller provides `len` writable bytes; n + 1 <= len.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Opaque weighted measure.
pub struct SqeMeasure(WeightedMeasure);

/// Builds a purely atomic measure `Σ weights[i] δ_{alphas[i]}` on
/// `[-alpha0, alpha0]`; `alpha0 = 0` picks the smallest interval that fits.
///
/// # Safety
/// `alphas` and `weights` must be valid for `count` reads, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn sqe_measure_atoms(
    alpha0: f64,
    alphas: *const f64,
    weights: *const f64,
    count: usize,
    out: *mut *mut SqeMeasure,
) -> SqeStatus {
    guard(|| {
        non_null!(out);
        if count > 0 {
            non_null!(alphas, weights);
        }
        let atoms: Vec<Atom> = (0..count)
            // SAFETY: both arrays hold `count` values.
            .map(|i| unsafe {
                Atom {
                    alpha: *alphas.add(i),
                    weight: *weights.add(i),
                }
            })
            .collect();
        let a0 = if alpha0 > 0.0 {
            alpha0
        } else {
            atoms.iter().map(|a| a.alpha.abs()).fold(0.0, f64::max)
        };
        let m = WeightedMeasure::new(a0, atoms, Vec::new())?;
        // SAFETY: `out` checked non-null.
        unsafe { *out = Box::into_raw(Box::new(SqeMeasure(m))) };
        Ok(SqeStatus::Ok)
    })
}

/// `(δ_alpha + δ_{-alpha}) / 2`, the sinh-type measure.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sqe_measure_sinh(alpha: f64, out: *mut *mut SqeMeasure) -> SqeStatus {
    guard(|| {
        non_null!(out);
        let m = WeightedMeasure::sinh(alpha)?;
        // SAFETY: `out` checked non-null.
        unsafe { *out = Box::into_raw(Box::new(SqeMeasure(m))) };
        Ok(SqeStatus::Ok)
    })
}

/// # Safety
/// `m` must be null or a handle from an `sqe_measure_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn sqe_measure_free(m: *mut SqeMeasure) {
    if !m.is_null() {
        // SAFETY: handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Plain configuration of a single trajectory. Zero `grid_size` or `dt`
/// selects the default.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SqeSimConfig {
    pub a: f64,
    pub n: u32,
    pub grid_size: u32,
    pub dt: f64,
    pub seed: u64,
    pub replica: u64,
    /// Nonzero runs the X + Y scheme.
    pub decomposed: u8,
    pub random_initial: u8,
    pub noise: u8,
}

/// Defaults matching the `sqe simulate` command.
#[no_mangle]
pub extern "C" fn sqe_sim_config_default() -> SqeSimConfig {
    let d = RunConfig::default();
    SqeSimConfig {
        a: d.a,
        n: d.n,
        grid_size: 0,
        dt: 0.0,
        seed: d.seed,
        replica: 0,
        decomposed: 0,
        random_initial: d.random_initial as u8,
        noise: d.noise as u8,
    }
}

/// Opaque running trajectory.
pub struct SqeSimulation {
    sim: Simulation,
    cfg: RunConfig,
    digest: [u8; 32],
}

/// # Safety
/// `measure` and `cfg` must be valid handles/pointers, `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sqe_simulation_new(
    measure: *const SqeMeasure,
    cfg: *const SqeSimConfig,
    out: *mut *mut SqeSimulation,
) -> SqeStatus {
    guard(|| {
        non_null!(measure, cfg, out);
        // SAFETY: checked non-null; caller guarantees validity.
        let (nu, c) = unsafe { (&(*measure).0, *cfg) };
        let run = RunConfig {
            a: c.a,
            n: c.n,
            grid_size: (c.grid_size > 0).then_some(c.grid_size as usize),
            dt: (c.dt != 0.0).then_some(c.dt),
            seed: c.seed,
            random_initial: c.random_initial != 0,
            noise: c.noise != 0,
            ..RunConfig::default()
        };
        let scheme = if c.decomposed != 0 { Scheme::Decomposed } else { Scheme::Full };
        let sim = Simulation::new(&run, nu, scheme, c.replica)?;
        let h = SqeSimulation {
            sim,
            cfg: run,
            digest: nu.digest(),
        };
        // SAFETY: `out` checked non-null.
        unsafe { *out = Box::into_raw(Box::new(h)) };
        Ok(SqeStatus::Ok)
    })
}

/// Advances `steps` time steps.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqe_simulation_step(sim: *mut SqeSimulation, steps: u64) -> SqeStatus {
    guard(|| {
        non_null!(sim);
        // SAFETY: live handle, exclusive access per the contract.
        let h = unsafe { &mut *sim };
        for _ in 0..steps {
            h.sim.step()?;
        }
        Ok(SqeStatus::Ok)
    })
}

/// Current time, or NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqe_simulation_time(sim: *const SqeSimulation) -> f64 {
    if sim.is_null() {
        return f64::NAN;
    }
    // SAFETY: live handle.
    unsafe { (*sim).sim.state().time }
}

/// Grid size `M`, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqe_simulation_grid_size(sim: *const SqeSimulation) -> usize {
    if sim.is_null() {
        return 0;
    }
    // SAFETY: live handle.
    unsafe { (*sim).sim.integrator().grid().size() }
}

/// Copies the `M²` grid values of the field, row-major, into `buf`.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sqe_simulation_copy_field(
    sim: *const SqeSimulation,
    buf: *mut f64,
    len: usize,
) -> SqeStatus {
    guard(|| {
        non_null!(sim, buf);
        // SAFETY: live handle.
        let phi = unsafe { &(*sim).sim.state().phi };
        let field = inverse_transform(phi, phi.grid())?;
        let v = field.values();
        if len < v.len() {
            return Ok(fail(
                SqeStatus::BufferTooSmall,
                format!("buffer holds {len} values, field has {}", v.len()),
            ));
        }
        // SAFETY: `buf` holds at least v.len() values.
        unsafe { ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len()) };
        Ok(SqeStatus::Ok)
    })
}

/// Writes the current field as a binary snapshot.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn sqe_simulation_write_snapshot(sim: *const SqeSimulation, path: *const c_char) -> SqeStatus {
    guard(|| {
        non_null!(sim, path);
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let (h, path) = unsafe { (&*sim, CStr::from_ptr(path)) };
        let Ok(path) = path.to_str() else {
            return Ok(fail(SqeStatus::InvalidArgument, "path is not UTF-8"));
        };
        let st = h.sim.state();
        let field = inverse_transform(&st.phi, st.phi.grid())?;
        let header = SnapshotHeader {
            grid_size: field.grid().size() as u32,
            a: h.cfg.a,
            n: h.cfg.n,
            time: st.time,
            seed: h.cfg.seed,
            measure_digest: h.digest,
        };
        SnapshotFile::new(header, field.into_values())?.write(Path::new(path))?;
        Ok(SqeStatus::Ok)
    })
}

/// # Safety
/// `sim` must be null or a handle from [`sqe_simulation_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn sqe_simulation_free(sim: *mut SqeSimulation) {
    if !sim.is_null() {
        // SAFETY: handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Renormalization constant `C_N` of the cutoff `A^N`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sqe_renorm_constant(a: f64, n: u32, out: *mut f64) -> SqeStatus {
    guard(|| {
        non_null!(out);
        let c = SpectralCutoff::new(a, n)?;
        // SAFETY: `out` checked non-null.
        unsafe { *out = renorm_constant(&c).value };
        Ok(SqeStatus::Ok)
    })
}

/// Hermite polynomial `H_n(x; c)`.
#[no_mangle]
pub extern "C" fn sqe_hermite(n: u32, x: f64, c: f64) -> f64 {
    hermite(n, x, c)
}

/// Exact `E‖exp_{N+1}(αφ) - exp_N(αφ)‖²_{H^{-β}}` on an `M × M` grid
/// (`grid_size = 0` picks one resolving the finer cutoff).
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sqe_wick_exp_diff_norm_oracle(
    alpha: f64,
    a: f64,
    n: u32,
    beta: f64,
    grid_size: u32,
    out: *mut f64,
) -> SqeStatus {
    guard(|| {
        non_null!(out);
        let c = SpectralCutoff::new(a, n)?;
        let grid = if grid_size == 0 {
            Grid::for_cutoff(&c.next()?, 4.0)
        } else {
            Grid::new(grid_size as usize)?
        };
        let v = wick_exp_diff_norm_oracle(alpha, &c, beta, grid)?;
        // SAFETY: `out` checked non-null.
        unsafe { *out = v };
        Ok(SqeStatus::Ok)
    })
}
