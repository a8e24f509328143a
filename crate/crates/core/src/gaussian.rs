//! Gaussian free field, Ornstein-Uhlenbeck mode dynamics and Wick calculus.
//!
//! The massive free field `μ0` has covariance `(1 - Δ)^{-1}`: in the `e_l`
//! basis the coefficients are independent with `E|φ̂(l)|^2 = 1 / (1 + |l|^2)`.
//! For `l != 0` the real and imaginary parts each carry half of that variance;
//! the zero mode is real with variance 1.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::spectral::{
    forward_field, inverse_transform, project, Grid, ModeEntry, ModeSet, RealField,
    SpectralCutoff, Spectrum,
};

/// Default bound `B` on the argument of every exponential.
pub const DEFAULT_EXPONENT_CLAMP: f64 = 50.0;

/// Renormalization constant `C_N = (2π)^{-2} Σ_{|l| <= A^N} 1 / (1 + |l|^2)`,
/// the pointwise variance of `P_N φ` under `μ0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenormConstant {
    pub cutoff: SpectralCutoff,
    pub value: f64,
}

pub fn renorm_constant(c: &SpectralCutoff) -> RenormConstant {
    let sum: f64 = c
        .lattice_modes()
        .into_iter()
        .map(|(a, b)| 1.0 / (1.0 + (a * a + b * b) as f64))
        .sum();
    RenormConstant {
        cutoff: *c,
        value: sum / (4.0 * PI * PI),
    }
}

/// Centered complex Gaussian with `E|z|^2 = variance`, real on the zero mode.
#[inline]
pub(crate) fn pair_gaussian<R: Rng + ?Sized>(rng: &mut R, entry: &ModeEntry, variance: f64) -> Complex64 {
    if entry.is_zero_mode() {
        let z: f64 = rng.sample(StandardNormal);
        Complex64::new(variance.sqrt() * z, 0.0)
    } else {
        let sd = (0.5 * variance).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(sd * re, sd * im)
    }
}

#[inline]
pub(crate) fn put_pair(s: &mut Spectrum, entry: &ModeEntry, z: Complex64) {
    let raw = s.raw_mut();
    raw[entry.offset] = z;
    raw[entry.conj_offset] = z.conj();
}

/// Draws `P_N φ` with `φ ~ μ0` over a precomputed mode set.
pub fn sample_gff_on<R: Rng + ?Sized>(rng: &mut R, set: &ModeSet) -> Spectrum {
    let mut s = Spectrum::zeros(set.grid());
    for e in set.entries() {
        let z = pair_gaussian(rng, e, 1.0 / e.lambda);
        put_pair(&mut s, e, z);
    }
    s
}

/// Draws `P_N φ` with `φ ~ μ0`, represented on `grid`.
pub fn sample_gff<R: Rng + ?Sized>(rng: &mut R, c: &SpectralCutoff, grid: Grid) -> Result<Spectrum> {
    Ok(sample_gff_on(rng, &ModeSet::new(c, grid)?))
}

/// Band-limited Ornstein-Uhlenbeck state `X^N_t = P_N X_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct OuState {
    pub time: f64,
    pub field: Spectrum,
    pub cutoff: SpectralCutoff,
}

impl OuState {
    pub fn zero(cutoff: SpectralCutoff, grid: Grid) -> Self {
        Self {
            time: 0.0,
            field: Spectrum::zeros(grid),
            cutoff,
        }
    }

    /// Stationary start: the field is drawn from `P_N μ0`.
    pub fn stationary<R: Rng + ?Sized>(rng: &mut R, cutoff: SpectralCutoff, grid: Grid) -> Result<Self> {
        Ok(Self {
            time: 0.0,
            field: sample_gff(rng, &cutoff, grid)?,
            cutoff,
        })
    }
}

/// Exact-in-law OU update over `dt` on every mode of the cutoff:
/// `X̂(t+dt) = e^{-dt λ/2} X̂(t) + η`, `E|η|^2 = (1 - e^{-dt λ}) / λ`.
pub fn ou_step<R: Rng + ?Sized>(state: &OuState, dt: f64, rng: &mut R) -> Result<OuState> {
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    let set = ModeSet::new(&state.cutoff, state.field.grid())?;
    let mut field = project(&state.field, &state.cutoff);
    for e in set.entries() {
        let decay = (-0.5 * dt * e.lambda).exp();
        let var = -(-dt * e.lambda).exp_m1() / e.lambda;
        let z = field.raw()[e.offset] * decay + pair_gaussian(rng, e, var);
        put_pair(&mut field, e, z);
    }
    Ok(OuState {
        time: state.time + dt,
        field,
        cutoff: state.cutoff,
    })
}

/// Hermite polynomial `H_n(x; c)` with generating function
/// `exp(t x - c t^2 / 2) = Σ t^n / n! H_n(x; c)`, via
/// `H_{n+1} = x H_n - c n H_{n-1}`.
pub fn hermite(n: u32, x: f64, c: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = x * cur - c * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Grid values of `P_N φ`.
pub fn projected_values(phi: &Spectrum, c: &SpectralCutoff, grid: Grid) -> Result<RealField> {
    inverse_transform(&project(phi, c), grid)
}

/// Wick power `:(P_N φ)^n: = H_n(P_N φ; C_N)` on the grid.
pub fn wick_power(phi: &Spectrum, n: u32, c: &SpectralCutoff, grid: Grid) -> Result<RealField> {
    let cn = renorm_constant(c).value;
    Ok(projected_values(phi, c, grid)?.map(|u| hermite(n, u, cn)))
}

/// `exp(clamp(α u - α^2 C / 2, ±bound))` pointwise; also returns the number of
/// clamped points.
pub fn wick_exp_of_values(u: &RealField, alpha: f64, cn: f64, bound: f64) -> (RealField, usize) {
    let shift = 0.5 * alpha * alpha * cn;
    let mut clamped = 0;
    let values = u
        .values()
        .iter()
        .map(|&v| {
            let arg = alpha * v - shift;
            if arg.abs() > bound {
                clamped += 1;
            }
            arg.clamp(-bound, bound).exp()
        })
        .collect();
    (RealField::new(u.grid(), values).expect("same grid"), clamped)
}

/// `exp_N^◇(αφ) = exp(α P_N φ - α^2 C_N / 2)` with the exponent clamp; the
/// second value counts clamped grid points.
pub fn wick_exp_clamped(
    phi: &Spectrum,
    alpha: f64,
    c: &SpectralCutoff,
    grid: Grid,
    bound: f64,
) -> Result<(RealField, usize)> {
    let u = projected_values(phi, c, grid)?;
    Ok(wick_exp_of_values(&u, alpha, renorm_constant(c).value, bound))
}

/// `exp_N^◇(αφ)` on the grid with the default clamp.
pub fn wick_exp(phi: &Spectrum, alpha: f64, c: &SpectralCutoff, grid: Grid) -> Result<RealField> {
    Ok(wick_exp_clamped(phi, alpha, c, grid, DEFAULT_EXPONENT_CLAMP)?.0)
}

/// Translation-invariant covariance `K_N(z) = E[P_Nφ(x) P_Nφ(x + z)]` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceKernel {
    pub cutoff: SpectralCutoff,
    pub values: RealField,
}

impl CovarianceKernel {
    /// `K_N(0)`.
    pub fn at_origin(&self) -> f64 {
        self.values.at(0, 0)
    }

    /// Spectrum of the kernel: `K̂_N(l) = 1 / (2π (1 + |l|^2))` on the mode set.
    pub fn spectrum(&self) -> Spectrum {
        forward_field(&self.values)
    }
}

pub fn covariance_kernel(c: &SpectralCutoff, grid: Grid) -> Result<CovarianceKernel> {
    let set = ModeSet::new(c, grid)?;
    let mut s = Spectrum::zeros(grid);
    for e in set.entries() {
        put_pair(&mut s, e, Complex64::new(1.0 / (2.0 * PI * e.lambda), 0.0));
    }
    Ok(CovarianceKernel {
        cutoff: *c,
        values: inverse_transform(&s, grid)?,
    })
}

/// Closed form of `E‖exp_{N+1}^◇(αφ) - exp_N^◇(αφ)‖^2_{H^{-β}}` under `μ0`,
/// evaluated at the resolution of `grid`.
///
/// With `R(z) = exp(α^2 K_{N+1}(z)) - exp(α^2 K_N(z))` the covariance of the
/// difference field (cross terms use `P_N P_{N+1} = P_N`), each coefficient
/// satisfies `E|D̂(l)|^2 = 2π R̂(l)`. The value is `2π Σ (1 + |l|^2)^{-β} R̂(l)`
/// over the grid modes, which is exactly the mean of the same norm computed
/// from grid samples.
pub fn wick_exp_diff_norm_oracle(alpha: f64, c: &SpectralCutoff, beta: f64, grid: Grid) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid("beta", format!("must lie in (0, 1), got {beta}")));
    }
    let hi = covariance_kernel(&c.next()?, grid)?;
    let lo = covariance_kernel(c, grid)?;
    let a2 = alpha * alpha;
    let r = hi
        .values
        .zip_map(&lo.values, |k1, k0| (a2 * k1).exp() - (a2 * k0).exp())?;
    let rhat = forward_field(&r);
    let sum: f64 = rhat
        .modes()
        .map(|((a, b), z)| (1.0 + (a * a + b * b) as f64).powf(-beta) * z.re)
        .sum();
    Ok(2.0 * PI * sum)
}
