//! Fourier-side algebra on the torus `(R / 2πZ)^2`.
//!
//! Fields are sampled on a uniform `M x M` grid with points
//! `x = (2π i / M, 2π j / M)`. Spectra use the orthonormal basis
//! `e_l(x) = exp(i l·x) / (2π)`, so a field is `f = Σ f̂(l) e_l` with
//! `f̂(l) = ∫ f(x) conj(e_l(x)) dx` and Parseval holds without extra constants.
//!
//! Coefficient storage follows FFT ordering: entry `(i, j)` holds the mode
//! `l = (freq(i), freq(j))` where `freq(k) = k` for `k < M/2` and `k - M`
//! otherwise. The Nyquist row and column (`k = M/2`) have no Hermitian partner
//! and are kept at zero.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result, SqeError};

/// A lattice frequency `l ∈ Z^2`.
pub type Mode = (i64, i64);

const TWO_PI: f64 = 2.0 * PI;
/// Area of the torus, `4π^2`.
pub const TORUS_AREA: f64 = 4.0 * PI * PI;

/// Uniform `M x M` discretization of the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    size: usize,
}

impl Grid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 || size % 2 != 0 {
            return Err(SqeError::InvalidGrid(format!(
                "points per axis must be a positive even integer, got {size}"
            )));
        }
        Ok(Self { size })
    }

    /// Smallest power of two `M >= oversampling * K` that also satisfies the
    /// Nyquist condition `M >= 2 floor(K) + 2`.
    pub fn for_cutoff(cutoff: &SpectralCutoff, oversampling: f64) -> Self {
        let k = cutoff.radius();
        let need = (oversampling * k).ceil().max(2.0 * k.floor() + 2.0).max(2.0) as usize;
        Self {
            size: need.next_power_of_two(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spacing(&self) -> f64 {
        TWO_PI / self.size as f64
    }

    pub fn len(&self) -> usize {
        self.size * self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Whether every mode of `cutoff` is representable below Nyquist.
    pub fn resolves(&self, cutoff: &SpectralCutoff) -> bool {
        self.size as f64 >= 2.0 * cutoff.radius().floor() + 2.0
    }

    /// Signed frequency for FFT index `k`; `None` on the Nyquist index.
    #[inline]
    pub fn frequency(&self, k: usize) -> Option<i64> {
        let half = self.size / 2;
        match k.cmp(&half) {
            std::cmp::Ordering::Less => Some(k as i64),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(k as i64 - self.size as i64),
        }
    }

    /// FFT index of signed frequency `l`, if it lies strictly below Nyquist.
    #[inline]
    pub fn index_of(&self, l: i64) -> Option<usize> {
        let half = (self.size / 2) as i64;
        if l.abs() >= half {
            None
        } else if l >= 0 {
            Some(l as usize)
        } else {
            Some((l + self.size as i64) as usize)
        }
    }

    /// Flat storage offset of mode `l`.
    #[inline]
    pub fn offset(&self, l: Mode) -> Option<usize> {
        Some(self.index_of(l.0)? * self.size + self.index_of(l.1)?)
    }

    /// Coordinates of grid point `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.spacing(), j as f64 * self.spacing())
    }

    fn check_mode(&self, l: Mode) -> Result<usize> {
        self.offset(l)
            .ok_or(SqeError::ModeExceedsNyquist(l.0, l.1, self.size))
    }
}

/// Real field sampled on a [`Grid`], row-major in `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SqeError::DimensionMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let m = grid.size();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..m {
            for j in 0..m {
                let (x1, x2) = grid.point(i, j);
                values.push(f(x1, x2));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.size() + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Equal-weight quadrature of `∫ f dx` over the torus.
    pub fn integral(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `(∫ |f|^p dx)^{1/p}` by equal-weight quadrature.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (self.grid.cell_area() * s).powf(1.0 / p)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(SqeError::DimensionMismatch {
                expected: self.grid.len(),
                actual: other.grid.len(),
            });
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Cutoff `P_N` onto the Euclidean ball `|l| <= A^N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralCutoff {
    radius: f64,
    schedule: Option<(f64, u32)>,
}

impl SpectralCutoff {
    /// Cutoff with radius `A^N`, `A > 1`.
    pub fn new(a: f64, n: u32) -> Result<Self> {
        if !(a > 1.0) || !a.is_finite() {
            return Err(invalid("A", format!("must be a finite real > 1, got {a}")));
        }
        Ok(Self {
            radius: a.powi(n as i32),
            schedule: Some((a, n)),
        })
    }

    /// Cutoff with an explicit radius, outside any `(A, N)` schedule.
    pub fn from_radius(radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(invalid("radius", format!("must be finite and >= 0, got {radius}")));
        }
        Ok(Self {
            radius,
            schedule: None,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn a(&self) -> Option<f64> {
        self.schedule.map(|s| s.0)
    }

    pub fn n(&self) -> Option<u32> {
        self.schedule.map(|s| s.1)
    }

    /// The cutoff `N + 1` of the same schedule.
    pub fn next(&self) -> Result<Self> {
        match self.schedule {
            Some((a, n)) => Self::new(a, n + 1),
            None => Err(invalid("cutoff", "explicit-radius cutoff has no successor")),
        }
    }

    #[inline]
    pub fn contains_sq(&self, r2: i64) -> bool {
        // ties |l| = A^N are in the set
        (r2 as f64) <= self.radius * self.radius * (1.0 + 1e-12) + 1e-12
    }

    pub fn contains(&self, l: Mode) -> bool {
        self.contains_sq(l.0 * l.0 + l.1 * l.1)
    }

    /// All `l ∈ Z^2` with `|l| <= K`, in [`ModeSet`] order.
    pub fn lattice_modes(&self) -> Vec<Mode> {
        let kmax = self.radius.floor() as i64;
        let mut modes = Vec::new();
        for l1 in -kmax..=kmax {
            for l2 in -kmax..=kmax {
                if self.contains((l1, l2)) {
                    modes.push((l1, l2));
                }
            }
        }
        modes.sort_by_key(|&(a, b)| (a * a + b * b, a, b));
        modes
    }
}

/// A representative of a Hermitian pair `{l, -l}` in a [`ModeSet`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeEntry {
    pub mode: Mode,
    /// `1 + |l|^2`, the eigenvalue of `1 - Δ`.
    pub lambda: f64,
    pub offset: usize,
    pub conj_offset: usize,
}

impl ModeEntry {
    pub fn is_zero_mode(&self) -> bool {
        self.mode == (0, 0)
    }
}

/// Half-plane representatives of a cutoff's mode set on a grid, ordered by
/// `(|l|^2, l_1, l_2)`.
///
/// The ordering is independent of the cutoff, so the set for `N` is a prefix
/// of the set for `N + 1`. Random draws consumed in this order couple runs at
/// different cutoffs through shared noise on common modes.
#[derive(Clone, Debug)]
pub struct ModeSet {
    grid: Grid,
    cutoff: SpectralCutoff,
    entries: Vec<ModeEntry>,
}

impl ModeSet {
    pub fn new(cutoff: &SpectralCutoff, grid: Grid) -> Result<Self> {
        if !grid.resolves(cutoff) {
            return Err(SqeError::InvalidGrid(format!(
                "{m}x{m} grid does not resolve cutoff radius {k}",
                m = grid.size(),
                k = cutoff.radius()
            )));
        }
        let entries = cutoff
            .lattice_modes()
            .into_iter()
            .filter(|&(a, b)| b > 0 || (b == 0 && a >= 0))
            .map(|l| {
                let offset = grid.check_mode(l)?;
                let conj_offset = grid.check_mode((-l.0, -l.1))?;
                Ok(ModeEntry {
                    mode: l,
                    lambda: 1.0 + (l.0 * l.0 + l.1 * l.1) as f64,
                    offset,
                    conj_offset,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            cutoff: *cutoff,
            entries,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn cutoff(&self) -> SpectralCutoff {
        self.cutoff
    }

    pub fn entries(&self) -> &[ModeEntry] {
        &self.entries
    }

    /// Number of real degrees of freedom (`2 * pairs + 1`).
    pub fn real_dimension(&self) -> usize {
        2 * self.entries.len() - 1
    }
}

/// Hermitian-symmetric Fourier coefficients of a real field on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Builds a spectrum from explicit `(mode, coefficient)` pairs. Entries are
    /// stored exactly as given; callers supplying a real field list both `l`
    /// and `-l`.
    pub fn from_modes(grid: Grid, modes: &[(Mode, Complex64)]) -> Result<Self> {
        let mut s = Self::zeros(grid);
        for &(l, z) in modes {
            s.set(l, z)?;
        }
        Ok(s)
    }

    pub(crate) fn from_raw(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of mode `l`; zero when `l` is not representable.
    pub fn get(&self, l: Mode) -> Complex64 {
        self.grid
            .offset(l)
            .map_or(Complex64::new(0.0, 0.0), |k| self.coeffs[k])
    }

    pub fn set(&mut self, l: Mode, z: Complex64) -> Result<()> {
        let k = self.grid.check_mode(l)?;
        self.coeffs[k] = z;
        Ok(())
    }

    /// Sets `l` to `z` and `-l` to `conj(z)`.
    pub fn set_hermitian(&mut self, l: Mode, z: Complex64) -> Result<()> {
        let z = if l == (0, 0) { Complex64::new(z.re, 0.0) } else { z };
        self.set(l, z)?;
        self.set((-l.0, -l.1), z.conj())
    }

    /// Iterator over `(mode, coefficient)` for every representable mode.
    pub fn modes(&self) -> impl Iterator<Item = (Mode, Complex64)> + '_ {
        let m = self.grid.size();
        self.coeffs.iter().enumerate().filter_map(move |(k, &z)| {
            let l1 = self.grid.frequency(k / m)?;
            let l2 = self.grid.frequency(k % m)?;
            Some(((l1, l2), z))
        })
    }

    /// `Σ |f̂(l)|^2`, the squared `L^2` norm by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest `|f̂(-l) - conj(f̂(l))|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.modes()
            .map(|(l, z)| (self.get((-l.0, -l.1)) - z.conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `L^2` inner product `⟨f, g⟩ = Σ f̂(l) conj(ĝ(l))`; real for real fields.
    pub fn inner(&self, other: &Spectrum) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Point evaluation `Σ f̂(l) e_l(x)` by direct summation.
    pub fn eval(&self, x: (f64, f64)) -> f64 {
        self.modes()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|((l1, l2), z)| {
                let phase = l1 as f64 * x.0 + l2 as f64 * x.1;
                (z * Complex64::from_polar(1.0, phase)).re
            })
            .sum::<f64>()
            / TWO_PI
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &Spectrum) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Spectrum) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &Spectrum, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(SqeError::DimensionMismatch {
                expected: self.grid.len(),
                actual: other.grid.len(),
            });
        }
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest `|l|^2` carrying a nonzero coefficient.
    pub fn max_radius_sq(&self) -> i64 {
        self.modes()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(l, _)| l.0 * l.0 + l.1 * l.1)
            .max()
            .unwrap_or(0)
    }

    /// Moves the coefficients onto `grid`, failing if a nonzero mode does not
    /// fit below the target Nyquist limit.
    pub fn resample(&self, grid: Grid) -> Result<Self> {
        if grid == self.grid {
            return Ok(self.clone());
        }
        let mut out = Self::zeros(grid);
        for (l, z) in self.modes() {
            if z.norm_sqr() == 0.0 {
                continue;
            }
            let k = grid.check_mode(l)?;
            out.coeffs[k] = z;
        }
        Ok(out)
    }

    /// Per-mode multiplier `f̂(l) -> w(|l|^2) f̂(l)`.
    pub fn multiply_radial(&self, w: impl Fn(f64) -> f64) -> Self {
        let m = self.grid.size();
        let mut coeffs = self.coeffs.clone();
        for (k, z) in coeffs.iter_mut().enumerate() {
            match (self.grid.frequency(k / m), self.grid.frequency(k % m)) {
                (Some(a), Some(b)) => *z *= w((a * a + b * b) as f64),
                _ => *z = Complex64::new(0.0, 0.0),
            }
        }
        Self {
            grid: self.grid,
            coeffs,
        }
    }
}

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(m: usize) -> Plans {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<usize, Plans>)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, map) = &mut *guard;
    if let Some(p) = map.get(&m) {
        return p.clone();
    }
    let p = (planner.plan_fft_forward(m), planner.plan_fft_inverse(m));
    map.insert(m, p.clone());
    p
}

fn transpose(buf: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}

/// Unnormalized 2D DFT in place, `Σ_x f(x) exp(∓ i l·x)`.
pub(crate) fn fft2(buf: &mut [Complex64], m: usize, inverse: bool) {
    let (fwd, inv) = plans(m);
    let plan = if inverse { inv } else { fwd };
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(buf, &mut scratch);
    transpose(buf, m);
    plan.process_with_scratch(buf, &mut scratch);
    transpose(buf, m);
}

/// Fourier coefficients of grid samples; Nyquist content is discarded.
pub fn forward_transform(values: &[f64], grid: Grid) -> Result<Spectrum> {
    if values.len() != grid.len() {
        return Err(SqeError::DimensionMismatch {
            expected: grid.len(),
            actual: values.len(),
        });
    }
    let m = grid.size();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, m, false);
    let scale = TWO_PI / (m * m) as f64;
    let half = m / 2;
    for (k, z) in buf.iter_mut().enumerate() {
        if k / m == half || k % m == half {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z *= scale;
        }
    }
    Ok(Spectrum::from_raw(grid, buf))
}

/// Convenience wrapper over [`forward_transform`] for a [`RealField`].
pub fn forward_field(field: &RealField) -> Spectrum {
    forward_transform(field.values(), field.grid()).expect("field matches its own grid")
}

/// Grid values `Σ f̂(l) e_l(x)` of a spectrum.
pub fn inverse_transform(s: &Spectrum, grid: Grid) -> Result<RealField> {
    let s = s.resample(grid)?;
    let m = grid.size();
    let mut buf = s.coeffs;
    fft2(&mut buf, m, true);
    let values = buf.into_iter().map(|z| z.re / TWO_PI).collect();
    RealField::new(grid, values)
}

/// `P_N s`: zero every coefficient with `|l| > A^N`.
pub fn project(s: &Spectrum, c: &SpectralCutoff) -> Spectrum {
    let m = s.grid.size();
    let mut coeffs = s.coeffs.clone();
    for (k, z) in coeffs.iter_mut().enumerate() {
        let keep = match (s.grid.frequency(k / m), s.grid.frequency(k % m)) {
            (Some(a), Some(b)) => c.contains_sq(a * a + b * b),
            _ => false,
        };
        if !keep {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    Spectrum::from_raw(s.grid, coeffs)
}

/// `‖(1 - Δ)^{σ/2} f‖_{L^2}`.
pub fn sobolev_norm(s: &Spectrum, sigma: f64) -> f64 {
    sobolev_norm_sq(s, sigma).sqrt()
}

pub(crate) fn sobolev_norm_sq(s: &Spectrum, sigma: f64) -> f64 {
    s.modes()
        .map(|((a, b), z)| (1.0 + (a * a + b * b) as f64).powf(sigma) * z.norm_sqr())
        .sum()
}

/// Dyadic block index: 0 for `|l| <= 1`, `j` for `2^{j-1} < |l| <= 2^j`.
fn dyadic_block(r2: i64) -> u32 {
    if r2 <= 1 {
        return 0;
    }
    let mut j = 1;
    while (1i64 << (2 * j)) < r2 {
        j += 1;
    }
    j
}

/// Besov `B^σ_{p,p}` norm with sharp dyadic blocks; block `L^p` norms are
/// computed on `grid`.
pub fn besov_norm(s: &Spectrum, sigma: f64, p: f64, grid: Grid) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    let s = s.resample(grid)?;
    let top = dyadic_block(s.max_radius_sq());
    let m = grid.size();
    let mut total = 0.0;
    for j in 0..=top {
        let mut block = s.clone();
        for (k, z) in block.coeffs.iter_mut().enumerate() {
            let inside = match (grid.frequency(k / m), grid.frequency(k % m)) {
                (Some(a), Some(b)) => dyadic_block(a * a + b * b) == j,
                _ => false,
            };
            if !inside {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        if block.norm_sq() == 0.0 {
            continue;
        }
        let lp = inverse_transform(&block, grid)?.lp_norm(p);
        total += 2f64.powf(j as f64 * sigma * p) * lp.powf(p);
    }
    Ok(total.powf(1.0 / p))
}

/// Heat semigroup `exp((t/2)(Δ - 1))`: mode `l` scaled by `exp(-t (1 + |l|^2) / 2)`.
pub fn heat_semigroup(s: &Spectrum, t: f64) -> Result<Spectrum> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be >= 0, got {t}")));
    }
    Ok(s.multiply_radial(|r2| (-0.5 * t * (1.0 + r2)).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_band_limited(grid: Grid, radius: f64, seed: u64) -> Spectrum {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let cutoff = SpectralCutoff::from_radius(radius).unwrap();
        let set = ModeSet::new(&cutoff, grid).unwrap();
        let mut s = Spectrum::zeros(grid);
        for e in set.entries() {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            s.set_hermitian(e.mode, z).unwrap();
        }
        s
    }

    #[test]
    fn grid_rejects_odd_sizes() {
        assert!(Grid::new(7).is_err());
        assert!(Grid::new(0).is_err());
        assert!(Grid::new(8).is_ok());
    }

    #[test]
    fn default_grid_oversamples_by_four() {
        let g = Grid::for_cutoff(&SpectralCutoff::new(2.0, 3).unwrap(), 4.0);
        assert_eq!(g.size(), 32);
        let g = Grid::for_cutoff(&SpectralCutoff::new(2.0, 0).unwrap(), 4.0);
        assert_eq!(g.size(), 4);
        assert!(g.resolves(&SpectralCutoff::new(2.0, 0).unwrap()));
    }

    #[test]
    fn constant_field_transforms_to_zero_mode() {
        let grid = Grid::new(8).unwrap();
        let v = vec![1.0 / TWO_PI; grid.len()];
        let s = forward_transform(&v, grid).unwrap();
        assert_relative_eq!(s.get((0, 0)).re, 1.0, epsilon = 1e-14);
        for (l, z) in s.modes() {
            if l != (0, 0) {
                assert!(z.norm() < 1e-14, "mode {l:?} = {z}");
            }
        }
    }

    #[test]
    fn cosine_transforms_to_unit_pair() {
        let grid = Grid::new(16).unwrap();
        let f = RealField::from_fn(grid, |x1, _| x1.cos() / PI);
        let s = forward_field(&f);
        assert_relative_eq!(s.get((1, 0)).re, 1.0, epsilon = 1e-13);
        assert_relative_eq!(s.get((-1, 0)).re, 1.0, epsilon = 1e-13);
        let rest: f64 = s
            .modes()
            .filter(|(l, _)| l.1 != 0 || l.0.abs() != 1)
            .map(|(_, z)| z.norm())
            .sum();
        assert!(rest < 1e-13);
    }

    #[test]
    fn zero_round_trips() {
        let grid = Grid::new(8).unwrap();
        let s = forward_transform(&vec![0.0; 64], grid).unwrap();
        assert_eq!(s.norm_sq(), 0.0);
        assert_eq!(inverse_transform(&s, grid).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn inverse_of_known_spectra() {
        let grid = Grid::new(16).unwrap();
        let s = Spectrum::from_modes(grid, &[((0, 0), c(1.0))]).unwrap();
        let f = inverse_transform(&s, grid).unwrap();
        for v in f.values() {
            assert_relative_eq!(*v, 1.0 / TWO_PI, epsilon = 1e-15);
        }
        let s = Spectrum::from_modes(grid, &[((1, 0), c(1.0)), ((-1, 0), c(1.0))]).unwrap();
        let f = inverse_transform(&s, grid).unwrap();
        let expect = RealField::from_fn(grid, |x1, _| x1.cos() / PI);
        for (a, b) in f.values().iter().zip(expect.values()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-14);
        }
    }

    #[test]
    fn dimension_and_nyquist_errors() {
        let grid = Grid::new(8).unwrap();
        assert!(matches!(
            forward_transform(&[0.0; 10], grid),
            Err(SqeError::DimensionMismatch { .. })
        ));
        let big = Grid::new(16).unwrap();
        let s = Spectrum::from_modes(big, &[((5, 0), c(1.0)), ((-5, 0), c(1.0))]).unwrap();
        assert!(matches!(
            inverse_transform(&s, grid),
            Err(SqeError::ModeExceedsNyquist(..))
        ));
        // a coarser-but-sufficient grid is fine
        let s = Spectrum::from_modes(big, &[((3, 0), c(1.0)), ((-3, 0), c(1.0))]).unwrap();
        assert!(inverse_transform(&s, grid).is_ok());
    }

    #[test]
    fn projection_examples() {
        let grid = Grid::new(16).unwrap();
        let s = Spectrum::from_modes(grid, &[((3, 0), c(1.0)), ((-3, 0), c(1.0))]).unwrap();
        let k2 = SpectralCutoff::from_radius(2.0).unwrap();
        assert_eq!(project(&s, &k2).norm_sq(), 0.0);

        let s = Spectrum::from_modes(
            grid,
            &[((0, 0), c(2.0)), ((1, 1), c(1.0)), ((-1, -1), c(1.0))],
        )
        .unwrap();
        let k1 = SpectralCutoff::from_radius(1.0).unwrap();
        let p = project(&s, &k1);
        assert_eq!(p.get((0, 0)), c(2.0));
        assert_eq!(p.get((1, 1)), c(0.0));
        assert_eq!(project(&p, &k1), p);
    }

    #[test]
    fn cutoff_mode_set_is_the_euclidean_ball() {
        let c = SpectralCutoff::new(2.0, 1).unwrap();
        let modes = c.lattice_modes();
        // |l| <= 2: 1 + 4 + 4 + 4 = 13
        assert_eq!(modes.len(), 13);
        assert!(modes.contains(&(2, 0)));
        assert!(!modes.contains(&(2, 1)));
        assert_eq!(modes[0], (0, 0));
        let next = c.next().unwrap().lattice_modes();
        assert!(modes.iter().all(|m| next.contains(m)));
        assert_eq!(&next[..modes.len()], &modes[..], "prefix ordering");
    }

    #[test]
    fn mode_set_counts_real_dimension() {
        let grid = Grid::new(4).unwrap();
        let set = ModeSet::new(&SpectralCutoff::from_radius(1.0).unwrap(), grid).unwrap();
        assert_eq!(set.entries().len(), 3);
        assert_eq!(set.real_dimension(), 5);
        assert!(ModeSet::new(&SpectralCutoff::from_radius(2.0).unwrap(), grid).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let grid = Grid::new(8).unwrap();
        let s = Spectrum::from_modes(grid, &[((0, 0), c(1.0))]).unwrap();
        for sigma in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            assert_relative_eq!(sobolev_norm(&s, sigma), 1.0);
        }
        let s = Spectrum::from_modes(grid, &[((1, 0), c(1.0)), ((-1, 0), c(1.0))]).unwrap();
        assert_relative_eq!(sobolev_norm(&s, -1.0), 1.0, epsilon = 1e-15);
        assert_eq!(sobolev_norm(&Spectrum::zeros(grid), 0.3), 0.0);
    }

    #[test]
    fn besov_examples() {
        let grid = Grid::new(8).unwrap();
        let s = Spectrum::from_modes(grid, &[((0, 0), c(1.0))]).unwrap();
        for sigma in [-1.0, 0.0, 2.0] {
            assert_relative_eq!(besov_norm(&s, sigma, 2.0, grid).unwrap(), 1.0, epsilon = 1e-13);
        }
        assert_eq!(besov_norm(&Spectrum::zeros(grid), 1.0, 3.0, grid).unwrap(), 0.0);
        assert!(besov_norm(&s, 0.0, 0.5, grid).is_err());
    }

    #[test]
    fn dyadic_blocks() {
        assert_eq!(dyadic_block(0), 0);
        assert_eq!(dyadic_block(1), 0);
        assert_eq!(dyadic_block(2), 1);
        assert_eq!(dyadic_block(4), 1);
        assert_eq!(dyadic_block(5), 2);
        assert_eq!(dyadic_block(16), 2);
        assert_eq!(dyadic_block(17), 3);
    }

    #[test]
    fn heat_examples() {
        let grid = Grid::new(8).unwrap();
        let s = Spectrum::from_modes(grid, &[((0, 0), c(1.0)), ((1, 0), c(1.0)), ((-1, 0), c(1.0))]).unwrap();
        let h = heat_semigroup(&s, 2.0).unwrap();
        assert_relative_eq!(h.get((0, 0)).re, (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(h.get((1, 0)).re, (-2.0f64).exp(), epsilon = 1e-15);
        assert_eq!(heat_semigroup(&s, 0.0).unwrap(), s);
        assert!(heat_semigroup(&s, -1.0).is_err());
    }

    #[test]
    fn sobolev_monotone_in_sigma() {
        let grid = Grid::new(16).unwrap();
        let mut s = random_band_limited(grid, 5.0, 3);
        s.set((0, 0), c(0.0)).unwrap();
        let norms: Vec<f64> = (-3..=3).map(|k| sobolev_norm(&s, k as f64 * 0.5)).collect();
        assert!(norms.windows(2).all(|w| w[0] <= w[1]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip_and_parseval(seed in any::<u64>(), radius in 0.0f64..7.0) {
            let grid = Grid::new(16).unwrap();
            let s = random_band_limited(grid, radius, seed);
            let f = inverse_transform(&s, grid).unwrap();
            let back = forward_field(&f);
            let scale = s.norm_sq().sqrt().max(1e-300);
            let err: f64 = back.sub(&s).unwrap().norm_sq().sqrt();
            prop_assert!(err / scale < 1e-12);
            let l2 = f.lp_norm(2.0);
            prop_assert!((l2 * l2 - s.norm_sq()).abs() <= 1e-10 * s.norm_sq().max(1e-300));
            prop_assert!(back.hermitian_defect() < 1e-12 * scale.max(1.0));
        }

        #[test]
        fn projection_contracts_and_is_idempotent(seed in any::<u64>(), k in 0.0f64..7.0, sigma in -2.0f64..2.0) {
            let grid = Grid::new(16).unwrap();
            let s = random_band_limited(grid, 7.0, seed);
            let c = SpectralCutoff::from_radius(k).unwrap();
            let p = project(&s, &c);
            prop_assert!(sobolev_norm(&p, sigma) <= sobolev_norm(&s, sigma) * (1.0 + 1e-15));
            prop_assert_eq!(project(&p, &c), p);
        }

        #[test]
        fn heat_semigroup_property(seed in any::<u64>(), t in 0.0f64..3.0, u in 0.0f64..3.0, sigma in -2.0f64..2.0) {
            let grid = Grid::new(16).unwrap();
            let s = random_band_limited(grid, 7.0, seed);
            let a = heat_semigroup(&heat_semigroup(&s, t).unwrap(), u).unwrap();
            let b = heat_semigroup(&s, t + u).unwrap();
            let d = a.sub(&b).unwrap().norm_sq().sqrt();
            prop_assert!(d <= 1e-14 * s.norm_sq().sqrt().max(1.0));
            prop_assert!(sobolev_norm(&b, sigma) <= sobolev_norm(&s, sigma));
        }

        #[test]
        fn besov_two_is_equivalent_to_sobolev(seed in any::<u64>(), sigma in -2.0f64..2.0) {
            let grid = Grid::new(32).unwrap();
            let s = random_band_limited(grid, 12.0, seed);
            let b = besov_norm(&s, sigma, 2.0, grid).unwrap();
            let h = sobolev_norm(&s, sigma);
            let bound = 2f64.powf(sigma.abs());
            prop_assert!(b <= bound * h * (1.0 + 1e-12) && h <= bound * b * (1.0 + 1e-12));
        }
    }
}
