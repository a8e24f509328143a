//! Time integration of the renormalized Langevin equation
//!
//! `∂t Φ = ½(Δ - 1)Φ - ½ ∫ α exp(α u - α² C_N / 2) ν(dα) + P_N Ẇ`
//!
//! and of its Da Prato-Debussche split `Φ = X + Y`, where `X` is the
//! band-limited Ornstein-Uhlenbeck process and `Y` solves
//! `∂t Y = ½(Δ - 1)Y - ½ ∫ α e^{αY} 𝒳^α ν(dα)` with `𝒳^α = exp_N^◇(α X)`.
//!
//! Both use exponential Euler: the linear part and the stochastic convolution
//! are exact per mode, the drift is frozen over a step and integrated against
//! the semigroup (`φ1` weight).

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Result, SqeError};
use crate::gaussian::{
    pair_gaussian, renorm_constant, sample_gff_on, wick_exp_of_values, OuState,
    DEFAULT_EXPONENT_CLAMP,
};
use crate::measure::{Atom, WeightedMeasure};
use crate::rng::{StreamKey, INITIAL_STREAM};
use crate::spectral::{
    forward_field, inverse_transform, project, Grid, Mode, ModeSet, RealField, SpectralCutoff,
    Spectrum,
};

/// Which field enters the exponent of the drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExponentConvention {
    /// `exp_N^◇(αΦ)`: the exponent uses `P_N Φ`.
    #[default]
    Projected,
    /// The exponent uses `Φ` itself.
    Literal,
}

impl ExponentConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Projected => "projected",
            Self::Literal => "literal",
        }
    }
}

/// Integrate `Φ` directly, or `X` and `Y` separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Full,
    Decomposed,
}

/// Run parameters. Unset `grid_size` / `dt` fall back to the default rules.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid_size: Option<usize>,
    /// Grid oversampling factor relative to the cutoff radius.
    pub oversampling: f64,
    pub a: f64,
    pub n: u32,
    pub dt: Option<f64>,
    pub horizon: f64,
    /// Sobolev index of the monitoring norm `H^{-β}`.
    pub beta: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub seed: u64,
    pub replicas: usize,
    pub drift_projected: bool,
    pub exponent: ExponentConvention,
    pub exponent_clamp: f64,
    /// Deterministic part `η` of the initial condition, as Fourier modes.
    pub eta: Vec<(Mode, Complex64)>,
    /// Draw `P_N ξ`, `ξ ~ μ0`, into the initial condition.
    pub random_initial: bool,
    /// Drive with `P_N Ẇ`; `false` gives the deterministic equation.
    pub noise: bool,
    /// Record every `output_every`-th step.
    pub output_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_size: None,
            oversampling: 4.0,
            a: 2.0,
            n: 2,
            dt: None,
            horizon: 1.0,
            beta: 0.5,
            epsilon: 0.1,
            lambda: 0.5,
            seed: 0,
            replicas: 1,
            drift_projected: true,
            exponent: ExponentConvention::Projected,
            exponent_clamp: DEFAULT_EXPONENT_CLAMP,
            eta: Vec::new(),
            random_initial: true,
            noise: true,
            output_every: 100,
        }
    }
}

/// Default time step: `1e-3` up to `K = 8`, halved per doubling of `K`.
pub fn default_time_step(radius: f64) -> f64 {
    let doublings = if radius <= 8.0 {
        0
    } else {
        (radius / 8.0).log2().ceil() as i32
    };
    1e-3 * 0.5f64.powi(doublings)
}

impl RunConfig {
    pub fn cutoff(&self) -> Result<SpectralCutoff> {
        SpectralCutoff::new(self.a, self.n)
    }

    pub fn grid(&self) -> Result<Grid> {
        match self.grid_size {
            Some(m) => Grid::new(m),
            None => Ok(Grid::for_cutoff(&self.cutoff()?, self.oversampling)),
        }
    }

    pub fn time_step(&self) -> Result<f64> {
        Ok(match self.dt {
            Some(dt) => dt,
            None => default_time_step(self.cutoff()?.radius()),
        })
    }

    pub fn steps(&self) -> Result<u64> {
        Ok((self.horizon / self.time_step()?).round() as u64)
    }

    pub fn eta_spectrum(&self, grid: Grid) -> Result<Spectrum> {
        Spectrum::from_modes(grid, &self.eta)
    }

    /// Checks the configuration against the measure's regime.
    pub fn validate(&self, nu: &WeightedMeasure) -> Result<()> {
        let cutoff = self.cutoff()?;
        let grid = self.grid()?;
        if !grid.resolves(&cutoff) {
            return Err(SqeError::InvalidGrid(format!(
                "{m}x{m} grid does not resolve cutoff radius {k}",
                m = grid.size(),
                k = cutoff.radius()
            )));
        }
        let dt = self.time_step()?;
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("must be > 0, got {dt}")));
        }
        if !(self.horizon >= dt) {
            return Err(invalid("T", format!("horizon {} is shorter than dt {dt}", self.horizon)));
        }
        if !(self.exponent_clamp > 0.0) {
            return Err(invalid("clamp", "exponent clamp must be positive"));
        }
        if self.output_every == 0 {
            return Err(invalid("output_every", "must be >= 1"));
        }
        if !nu.l1_regime() {
            return Err(SqeError::InvalidMeasure(format!(
                "alpha0^2 = {} is outside the L1 regime alpha0^2 < 8π",
                nu.alpha0().powi(2)
            )));
        }
        if !nu.l2_regime() && !nu.one_signed() {
            return Err(SqeError::InvalidMeasure(
                "a two-signed measure requires the L2 regime alpha0^2 < 4π".into(),
            ));
        }
        if nu.l2_regime() {
            let lo = nu.alpha0().powi(2) / (4.0 * std::f64::consts::PI);
            if !(self.beta > lo && self.beta < 1.0) {
                return Err(invalid("beta", format!("must lie in ({lo}, 1), got {}", self.beta)));
            }
        }
        self.eta_spectrum(grid)?;
        Ok(())
    }
}

/// How the drift is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftOptions {
    pub projected: bool,
    pub exponent: ExponentConvention,
    pub clamp: f64,
}

impl Default for DriftOptions {
    fn default() -> Self {
        Self {
            projected: true,
            exponent: ExponentConvention::Projected,
            clamp: DEFAULT_EXPONENT_CLAMP,
        }
    }
}

impl From<&RunConfig> for DriftOptions {
    fn from(cfg: &RunConfig) -> Self {
        Self {
            projected: cfg.drift_projected,
            exponent: cfg.exponent,
            clamp: cfg.exponent_clamp,
        }
    }
}

/// A drift evaluation with its clamp diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftEval {
    pub spectrum: Spectrum,
    pub clamped: usize,
}

/// `G = -½ Σ_m w_m α_m exp(α_m u - α_m² c / 2)` on the grid.
fn drift_values(u: &RealField, nodes: &[Atom], cn: f64, clamp: f64) -> (RealField, usize) {
    let mut g = RealField::zeros(u.grid());
    let mut clamped = 0;
    for node in nodes {
        let (e, k) = wick_exp_of_values(u, node.alpha, cn, clamp);
        clamped += k;
        let coef = -0.5 * node.weight * node.alpha;
        for (gv, ev) in g.values_mut().iter_mut().zip(e.values()) {
            *gv += coef * ev;
        }
    }
    (g, clamped)
}

/// Renormalized drift `-½ ∫ α exp(α u - α² C_N / 2) ν(dα)` as a spectrum.
pub fn drift(
    phi: &Spectrum,
    nu: &WeightedMeasure,
    c: &SpectralCutoff,
    grid: Grid,
    opts: &DriftOptions,
) -> Result<DriftEval> {
    let nodes = nu.nodes();
    if nodes.is_empty() {
        return Ok(DriftEval {
            spectrum: Spectrum::zeros(grid),
            clamped: 0,
        });
    }
    let u = match opts.exponent {
        ExponentConvention::Projected => inverse_transform(&project(phi, c), grid)?,
        ExponentConvention::Literal => inverse_transform(phi, grid)?,
    };
    let (g, clamped) = drift_values(&u, &nodes, renorm_constant(c).value, opts.clamp);
    let mut spectrum = forward_field(&g);
    if opts.projected {
        spectrum = project(&spectrum, c);
    }
    Ok(DriftEval { spectrum, clamped })
}

/// Split parts of a decomposed state.
#[derive(Clone, Debug, PartialEq)]
pub struct DecomposedParts {
    pub x: OuState,
    pub y: Spectrum,
}

/// Time-stamped field state; `phi = x + y` when `parts` is present.
#[derive(Clone, Debug, PartialEq)]
pub struct SqeState {
    pub time: f64,
    pub phi: Spectrum,
    pub parts: Option<DecomposedParts>,
}

/// Per-mode exponential-Euler coefficients for one `(grid, cutoff, dt)`.
#[derive(Clone, Debug)]
pub struct Integrator {
    grid: Grid,
    cutoff: SpectralCutoff,
    modes: ModeSet,
    dt: f64,
    decay: Vec<f64>,
    phi1: Vec<f64>,
    noise_var: Vec<f64>,
    nodes: Vec<Atom>,
    cn: f64,
    opts: DriftOptions,
    noise: bool,
}

impl Integrator {
    pub fn new(cfg: &RunConfig, nu: &WeightedMeasure) -> Result<Self> {
        let cutoff = cfg.cutoff()?;
        let grid = cfg.grid()?;
        let dt = cfg.time_step()?;
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("must be > 0, got {dt}")));
        }
        let modes = ModeSet::new(&cutoff, grid)?;
        let m = grid.size();
        let mut decay = vec![0.0; grid.len()];
        let mut phi1 = vec![0.0; grid.len()];
        for (k, (d, p)) in decay.iter_mut().zip(phi1.iter_mut()).enumerate() {
            if let (Some(a), Some(b)) = (grid.frequency(k / m), grid.frequency(k % m)) {
                let rate = 0.5 * (1.0 + (a * a + b * b) as f64);
                *d = (-dt * rate).exp();
                // ∫_0^dt e^{-rate s} ds
                *p = -(-dt * rate).exp_m1() / rate;
            }
        }
        let noise_var = modes
            .entries()
            .iter()
            .map(|e| -(-dt * e.lambda).exp_m1() / e.lambda)
            .collect();
        Ok(Self {
            grid,
            cutoff,
            modes,
            dt,
            decay,
            phi1,
            noise_var,
            nodes: nu.nodes(),
            cn: renorm_constant(&cutoff).value,
            opts: DriftOptions::from(cfg),
            noise: cfg.noise,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn cutoff(&self) -> SpectralCutoff {
        self.cutoff
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn renorm(&self) -> f64 {
        self.cn
    }

    pub fn nodes(&self) -> &[Atom] {
        &self.nodes
    }

    /// Stochastic convolution over one step on the cutoff modes, drawn in
    /// mode-set order so that runs at nested cutoffs share noise.
    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Spectrum {
        let mut s = Spectrum::zeros(self.grid);
        if !self.noise {
            return s;
        }
        let raw = s.raw_mut();
        for (e, &var) in self.modes.entries().iter().zip(&self.noise_var) {
            let z = pair_gaussian(rng, e, var);
            raw[e.offset] = z;
            raw[e.conj_offset] = z.conj();
        }
        s
    }

    fn drift_of(&self, phi: &Spectrum) -> Result<DriftEval> {
        if self.nodes.is_empty() {
            return Ok(DriftEval {
                spectrum: Spectrum::zeros(self.grid),
                clamped: 0,
            });
        }
        let u = match self.opts.exponent {
            ExponentConvention::Projected => inverse_transform(&project(phi, &self.cutoff), self.grid)?,
            ExponentConvention::Literal => inverse_transform(phi, self.grid)?,
        };
        let (g, clamped) = drift_values(&u, &self.nodes, self.cn, self.opts.clamp);
        let mut spectrum = forward_field(&g);
        if self.opts.projected {
            spectrum = project(&spectrum, &self.cutoff);
        }
        Ok(DriftEval { spectrum, clamped })
    }

    /// `S(dt) v + φ1 ⊙ g + noise`.
    fn advance(&self, v: &Spectrum, g: Option<&Spectrum>, noise: Option<&Spectrum>) -> Spectrum {
        let mut out = v.clone();
        let raw = out.raw_mut();
        for (k, z) in raw.iter_mut().enumerate() {
            *z *= self.decay[k];
        }
        if let Some(g) = g {
            for (k, (z, gz)) in raw.iter_mut().zip(g.raw()).enumerate() {
                *z += gz * self.phi1[k];
            }
        }
        if let Some(n) = noise {
            for (z, nz) in raw.iter_mut().zip(n.raw()) {
                *z += nz;
            }
        }
        out
    }

    /// One exponential-Euler step of the full equation with the given noise.
    pub fn step_full_with(&self, phi: &Spectrum, noise: &Spectrum) -> Result<(Spectrum, usize)> {
        let d = self.drift_of(phi)?;
        Ok((self.advance(phi, Some(&d.spectrum), Some(noise)), d.clamped))
    }

    /// Wick exponentials `𝒳^α = exp(α X - α² C_N / 2)` of a band-limited OU
    /// field, one per node of `ν`.
    pub fn wick_fields(&self, x: &Spectrum) -> Result<(Vec<RealField>, usize)> {
        let u = inverse_transform(x, self.grid)?;
        let mut clamped = 0;
        let fields = self
            .nodes
            .iter()
            .map(|n| {
                let (f, k) = wick_exp_of_values(&u, n.alpha, self.cn, self.opts.clamp);
                clamped += k;
                f
            })
            .collect();
        Ok((fields, clamped))
    }

    /// One exponential-Euler step of the remainder equation
    /// `∂t Y = ½(Δ - 1)Y - ½ Σ w α e^{αY} 𝒳^α`, the product formed pointwise.
    pub fn step_remainder_with(&self, y: &Spectrum, wick: &[RealField]) -> Result<(Spectrum, usize)> {
        if wick.len() != self.nodes.len() {
            return Err(invalid(
                "wick_fields",
                format!("expected {} fields, got {}", self.nodes.len(), wick.len()),
            ));
        }
        if self.nodes.is_empty() {
            return Ok((self.advance(y, None, None), 0));
        }
        let yv = inverse_transform(y, self.grid)?;
        let mut g = RealField::zeros(self.grid);
        let mut clamped = 0;
        let bound = self.opts.clamp;
        for (node, xf) in self.nodes.iter().zip(wick) {
            if xf.grid() != self.grid {
                return Err(SqeError::DimensionMismatch {
                    expected: self.grid.len(),
                    actual: xf.grid().len(),
                });
            }
            let coef = -0.5 * node.weight * node.alpha;
            for ((gv, &yv), &xv) in g.values_mut().iter_mut().zip(yv.values()).zip(xf.values()) {
                let arg = node.alpha * yv;
                if arg.abs() > bound {
                    clamped += 1;
                }
                *gv += coef * arg.clamp(-bound, bound).exp() * xv;
            }
        }
        let mut gs = forward_field(&g);
        if self.opts.projected {
            gs = project(&gs, &self.cutoff);
        }
        Ok((self.advance(y, Some(&gs), None), clamped))
    }

    /// Exact OU update of `X` with the given noise.
    pub fn step_ou_with(&self, x: &Spectrum, noise: &Spectrum) -> Spectrum {
        self.advance(x, None, Some(noise))
    }
}

fn check_finite(s: &Spectrum, time: f64) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(SqeError::NumericAbort {
            time,
            detail: "field spectrum contains NaN or Inf".into(),
        })
    }
}

/// One step of the full equation (builds a fresh [`Integrator`]).
pub fn step_full<R: Rng + ?Sized>(
    state: &SqeState,
    cfg: &RunConfig,
    nu: &WeightedMeasure,
    rng: &mut R,
) -> Result<SqeState> {
    let integ = Integrator::new(cfg, nu)?;
    let noise = integ.draw_noise(rng);
    let (phi, _) = integ.step_full_with(&state.phi, &noise)?;
    let time = state.time + integ.dt();
    check_finite(&phi, time)?;
    Ok(SqeState {
        time,
        phi,
        parts: None,
    })
}

/// One step of the remainder equation (builds a fresh [`Integrator`]).
pub fn step_remainder(
    y: &Spectrum,
    wick_fields: &[RealField],
    cfg: &RunConfig,
    nu: &WeightedMeasure,
) -> Result<Spectrum> {
    let integ = Integrator::new(cfg, nu)?;
    let (out, _) = integ.step_remainder_with(y, wick_fields)?;
    check_finite(&out, f64::NAN)?;
    Ok(out)
}

/// Recorded states of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<SqeState>,
    /// Total number of clamped exponent evaluations.
    pub clamp_events: usize,
}

/// A single trajectory advanced step by step.
///
/// Step `n` (1-based) draws its noise from stream `n` of the replica's
/// [`StreamKey`]; the initial field uses stream 0.
#[derive(Clone, Debug)]
pub struct Simulation {
    integ: Integrator,
    key: StreamKey,
    scheme: Scheme,
    state: SqeState,
    step_index: u64,
    clamp_events: usize,
}

impl Simulation {
    /// Starts from `Φ0 = P_N ξ + η` (with `ξ = 0` unless `random_initial`).
    pub fn new(cfg: &RunConfig, nu: &WeightedMeasure, scheme: Scheme, replica: u64) -> Result<Self> {
        cfg.validate(nu)?;
        let integ = Integrator::new(cfg, nu)?;
        let key = StreamKey::new(cfg.seed, replica);
        let grid = integ.grid();
        let xi = if cfg.random_initial {
            sample_gff_on(&mut key.stream(INITIAL_STREAM), integ.modes())
        } else {
            Spectrum::zeros(grid)
        };
        let eta = cfg.eta_spectrum(grid)?;
        let phi = xi.add(&eta)?;
        let parts = match scheme {
            Scheme::Full => None,
            Scheme::Decomposed => Some(DecomposedParts {
                x: OuState {
                    time: 0.0,
                    field: xi,
                    cutoff: integ.cutoff(),
                },
                y: eta,
            }),
        };
        Ok(Self {
            integ,
            key,
            scheme,
            state: SqeState {
                time: 0.0,
                phi,
                parts,
            },
            step_index: 0,
            clamp_events: 0,
        })
    }

    /// Starts from a given field. In the decomposed scheme `X0 = P_N Φ0` and
    /// `Y0 = Φ0 - X0`.
    pub fn from_initial(
        cfg: &RunConfig,
        nu: &WeightedMeasure,
        scheme: Scheme,
        replica: u64,
        phi0: Spectrum,
    ) -> Result<Self> {
        let mut sim = Self::new(cfg, nu, scheme, replica)?;
        let phi0 = phi0.resample(sim.integ.grid())?;
        sim.state.parts = match scheme {
            Scheme::Full => None,
            Scheme::Decomposed => {
                let x = project(&phi0, &sim.integ.cutoff());
                let y = phi0.sub(&x)?;
                Some(DecomposedParts {
                    x: OuState {
                        time: 0.0,
                        field: x,
                        cutoff: sim.integ.cutoff(),
                    },
                    y,
                })
            }
        };
        sim.state.phi = phi0;
        Ok(sim)
    }

    pub fn integrator(&self) -> &Integrator {
        &self.integ
    }

    pub fn state(&self) -> &SqeState {
        &self.state
    }

    pub fn steps_taken(&self) -> u64 {
        self.step_index
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    pub fn step(&mut self) -> Result<()> {
        self.step_index += 1;
        let noise = self.integ.draw_noise(&mut self.key.step(self.step_index));
        let time = self.step_index as f64 * self.integ.dt();
        match self.scheme {
            Scheme::Full => {
                let (phi, k) = self.integ.step_full_with(&self.state.phi, &noise)?;
                check_finite(&phi, time)?;
                self.clamp_events += k;
                self.state = SqeState {
                    time,
                    phi,
                    parts: None,
                };
            }
            Scheme::Decomposed => {
                let parts = self.state.parts.as_ref().expect("decomposed state has parts");
                let (wick, k1) = self.integ.wick_fields(&parts.x.field)?;
                let (y, k2) = self.integ.step_remainder_with(&parts.y, &wick)?;
                let x = self.integ.step_ou_with(&parts.x.field, &noise);
                let phi = x.add(&y)?;
                check_finite(&phi, time)?;
                self.clamp_events += k1 + k2;
                self.state = SqeState {
                    time,
                    phi,
                    parts: Some(DecomposedParts {
                        x: OuState {
                            time,
                            field: x,
                            cutoff: self.integ.cutoff(),
                        },
                        y,
                    }),
                };
            }
        }
        Ok(())
    }

    /// Runs `steps` steps, recording the initial state and every
    /// `output_every`-th state (and always the last one).
    pub fn run(mut self, steps: u64, output_every: usize) -> Result<Trajectory> {
        let every = output_every.max(1) as u64;
        let mut states = vec![self.state.clone()];
        for n in 1..=steps {
            self.step()?;
            if n % every == 0 || n == steps {
                states.push(self.state.clone());
            }
        }
        Ok(Trajectory {
            states,
            clamp_events: self.clamp_events,
        })
    }
}

/// Runs replica `replica` of `cfg` over its full horizon.
pub fn simulate_replica(
    cfg: &RunConfig,
    nu: &WeightedMeasure,
    scheme: Scheme,
    replica: u64,
) -> Result<Trajectory> {
    Simulation::new(cfg, nu, scheme, replica)?.run(cfg.steps()?, cfg.output_every)
}

/// Runs replica 0 of `cfg`; deterministic given the seed.
pub fn simulate(cfg: &RunConfig, nu: &WeightedMeasure, scheme: Scheme) -> Result<Trajectory> {
    simulate_replica(cfg, nu, scheme, 0)
}

/// Runs the same seed at each cutoff `N` in `ns` on a common grid and time
/// step, so the runs share initial data and noise on common modes.
pub fn simulate_coupled(
    cfg: &RunConfig,
    nu: &WeightedMeasure,
    ns: &[u32],
    replica: u64,
) -> Result<Vec<Trajectory>> {
    let top = ns.iter().copied().max().ok_or_else(|| invalid("ns", "empty cutoff list"))?;
    let finest = RunConfig { n: top, ..cfg.clone() };
    let grid = cfg.grid_size.unwrap_or(finest.grid()?.size());
    let dt = finest.time_step()?;
    ns.iter()
        .map(|&n| {
            let c = RunConfig {
                n,
                grid_size: Some(grid),
                dt: Some(dt),
                ..cfg.clone()
            };
            simulate_replica(&c, nu, Scheme::Full, replica)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::ou_step;
    use crate::spectral::{heat_semigroup, sobolev_norm};
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sinh() -> WeightedMeasure {
        WeightedMeasure::sinh(1.0).unwrap()
    }

    fn small_cfg() -> RunConfig {
        RunConfig {
            a: 2.0,
            n: 2,
            horizon: 0.05,
            output_every: 10,
            ..RunConfig::default()
        }
    }

    #[test]
    fn default_time_step_rule() {
        assert_eq!(default_time_step(1.0), 1e-3);
        assert_eq!(default_time_step(8.0), 1e-3);
        assert_eq!(default_time_step(16.0), 5e-4);
        assert_eq!(default_time_step(32.0), 2.5e-4);
        assert_eq!(default_time_step(20.0), 2.5e-4);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let nu = sinh();
        assert!(small_cfg().validate(&nu).is_ok());
        let bad = RunConfig { beta: 0.05, ..small_cfg() };
        assert!(bad.validate(&nu).is_err());
        let bad = RunConfig { dt: Some(-1.0), ..small_cfg() };
        assert!(bad.validate(&nu).is_err());
        let bad = RunConfig { horizon: 1e-5, ..small_cfg() };
        assert!(bad.validate(&nu).is_err());
        let bad = RunConfig { grid_size: Some(4), ..small_cfg() };
        assert!(bad.validate(&nu).is_err());
        let two_signed_l1 = WeightedMeasure::sinh(4.0).unwrap();
        assert!(small_cfg().validate(&two_signed_l1).is_err());
        let one_signed_l1 = WeightedMeasure::dirac(4.0).unwrap();
        assert!(small_cfg().validate(&one_signed_l1).is_ok());
    }

    #[test]
    fn drift_examples() {
        let grid = Grid::new(16).unwrap();
        let cut = SpectralCutoff::new(2.0, 2).unwrap();
        let zero = Spectrum::zeros(grid);
        let opts = DriftOptions::default();
        let d = drift(&zero, &sinh(), &cut, grid, &opts).unwrap();
        assert!(d.spectrum.norm_sq().sqrt() < 1e-15);

        let alpha = 1.3;
        let d = drift(&zero, &WeightedMeasure::dirac(alpha).unwrap(), &cut, grid, &opts).unwrap();
        let cn = renorm_constant(&cut).value;
        let expect = -0.5 * alpha * (-0.5 * alpha * alpha * cn).exp();
        let g = inverse_transform(&d.spectrum, grid).unwrap();
        for v in g.values() {
            assert_relative_eq!(*v, expect, epsilon = 1e-13);
        }
    }

    #[test]
    fn drift_is_odd_for_sinh_and_under_reflection() {
        let grid = Grid::new(16).unwrap();
        let cut = SpectralCutoff::new(2.0, 2).unwrap();
        let key = StreamKey::new(3, 0);
        let phi = sample_gff_on(&mut key.stream(0), &ModeSet::new(&cut, grid).unwrap()).scale(2.0);
        let neg = phi.scale(-1.0);
        for projected in [true, false] {
            let opts = DriftOptions { projected, ..DriftOptions::default() };
            let a = drift(&phi, &sinh(), &cut, grid, &opts).unwrap().spectrum;
            let b = drift(&neg, &sinh(), &cut, grid, &opts).unwrap().spectrum;
            assert!(a.add(&b).unwrap().norm_sq().sqrt() < 1e-12);

            let nu = WeightedMeasure::uniform(1.2, 1.0, 16)
                .unwrap()
                .with_atoms([Atom { alpha: 0.7, weight: 0.3 }])
                .unwrap();
            let a = drift(&phi, &nu, &cut, grid, &opts).unwrap().spectrum;
            let b = drift(&neg, &nu.reflected(), &cut, grid, &opts).unwrap().spectrum;
            assert!(a.add(&b).unwrap().norm_sq().sqrt() < 1e-12);
        }
    }

    #[test]
    fn zero_measure_reduces_to_ou() {
        let nu = WeightedMeasure::zero(1.0).unwrap();
        let cfg = RunConfig { ..small_cfg() };
        let integ = Integrator::new(&cfg, &nu).unwrap();
        let grid = integ.grid();
        let cut = integ.cutoff();
        let key = StreamKey::new(4, 0);
        let x0 = OuState::stationary(&mut key.stream(0), cut, grid).unwrap();
        let mut outside = x0.field.clone();
        outside.set_hermitian((7, 0), c(1.0)).unwrap();
        let state = SqeState { time: 0.0, phi: outside, parts: None };
        let next = step_full(&state, &cfg, &nu, &mut key.step(1)).unwrap();
        let ou = ou_step(&x0, integ.dt(), &mut key.step(1)).unwrap();
        // cutoff modes follow ou_step exactly; the outside mode only decays
        let inside = project(&next.phi, &cut);
        assert!(inside.sub(&ou.field).unwrap().norm_sq().sqrt() < 1e-14);
        assert_relative_eq!(next.phi.get((7, 0)).re, (-0.5 * integ.dt() * 50.0).exp(), epsilon = 1e-15);
    }

    #[test]
    fn projected_drift_keeps_band_limit() {
        let mut cfg = small_cfg();
        cfg.eta = vec![((1, 0), c(0.3)), ((-1, 0), c(0.3))];
        let nu = WeightedMeasure::dirac(1.0).unwrap();
        let cut = cfg.cutoff().unwrap();
        let traj = simulate(&cfg, &nu, Scheme::Full).unwrap();
        for s in &traj.states {
            assert_eq!(project(&s.phi, &cut), s.phi);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = small_cfg();
        let a = simulate(&cfg, &sinh(), Scheme::Full).unwrap();
        let b = simulate(&cfg, &sinh(), Scheme::Full).unwrap();
        assert_eq!(a, b);
        let other = RunConfig { seed: 1, ..cfg };
        assert_ne!(a, simulate(&other, &sinh(), Scheme::Full).unwrap());
    }

    #[test]
    fn decomposed_reconstructs_full() {
        let mut cfg = small_cfg();
        cfg.eta = vec![((0, 1), c(0.5)), ((0, -1), c(0.5))];
        cfg.horizon = 0.2;
        let nu = sinh();
        let full = simulate(&cfg, &nu, Scheme::Full).unwrap();
        let dec = simulate(&cfg, &nu, Scheme::Decomposed).unwrap();
        let dt = cfg.time_step().unwrap();
        for (f, d) in full.states.iter().zip(&dec.states) {
            let parts = d.parts.as_ref().unwrap();
            let sum = parts.x.field.add(&parts.y).unwrap();
            assert_eq!(sum, d.phi);
            let gap = sobolev_norm(&f.phi.sub(&d.phi).unwrap(), -cfg.beta);
            assert!(gap < 10.0 * dt, "t = {}: gap {gap}", f.time);
        }
    }

    #[test]
    fn remainder_without_wick_fields_is_heat_flow() {
        let mut cfg = small_cfg();
        cfg.eta = vec![((2, 1), c(0.5)), ((-2, -1), c(0.5))];
        let nu = WeightedMeasure::dirac(1.0).unwrap();
        let grid = cfg.grid().unwrap();
        let y = cfg.eta_spectrum(grid).unwrap();
        let zeros = vec![RealField::zeros(grid)];
        let next = step_remainder(&y, &zeros, &cfg, &nu).unwrap();
        let heat = heat_semigroup(&y, cfg.time_step().unwrap()).unwrap();
        assert!(next.sub(&heat).unwrap().norm_sq().sqrt() < 1e-15);
        assert!(step_remainder(&y, &[], &cfg, &nu).is_err());
    }

    #[test]
    fn noiseless_free_energy_decays() {
        let cfg = RunConfig {
            noise: false,
            random_initial: false,
            eta: vec![((0, 0), c(1.0)), ((3, 1), c(0.4)), ((-3, -1), c(0.4))],
            horizon: 0.5,
            output_every: 5,
            ..small_cfg()
        };
        let traj = simulate(&cfg, &WeightedMeasure::zero(1.0).unwrap(), Scheme::Full).unwrap();
        let e: Vec<f64> = traj.states.iter().map(|s| s.phi.norm_sq()).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn step_halving_error_is_second_order() {
        let nu = sinh();
        let base = RunConfig { noise: false, ..small_cfg() };
        let grid = base.grid().unwrap();
        let cut = base.cutoff().unwrap();
        let phi = sample_gff_on(&mut StreamKey::new(8, 0).stream(0), &ModeSet::new(&cut, grid).unwrap())
            .scale(2.0);
        let zero = Spectrum::zeros(grid);
        let hs = [0.04, 0.02, 0.01, 0.005];
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let one = Integrator::new(&RunConfig { dt: Some(h), ..base.clone() }, &nu).unwrap();
                let half = Integrator::new(&RunConfig { dt: Some(h / 2.0), ..base.clone() }, &nu).unwrap();
                let (a, _) = one.step_full_with(&phi, &zero).unwrap();
                let (mid, _) = half.step_full_with(&phi, &zero).unwrap();
                let (b, _) = half.step_full_with(&mid, &zero).unwrap();
                sobolev_norm(&a.sub(&b).unwrap(), -base.beta)
            })
            .collect();
        let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let (mx, my) = (lx.iter().sum::<f64>() / 4.0, ly.iter().sum::<f64>() / 4.0);
        let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(slope >= 1.9, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn free_dynamics_keep_stationary_mode_variances() {
        let cfg = RunConfig {
            a: 1.01,
            n: 0,
            grid_size: Some(8),
            dt: Some(0.01),
            horizon: 1.0,
            output_every: 50,
            ..RunConfig::default()
        };
        let nu = WeightedMeasure::zero(1.0).unwrap();
        let reps = 3000;
        let runs: Vec<Trajectory> = (0..reps)
            .map(|r| simulate_replica(&cfg, &nu, Scheme::Full, r).unwrap())
            .collect();
        for k in 0..runs[0].states.len() {
            for (mode, lambda) in [((0, 0), 1.0), ((1, 0), 2.0)] {
                let v: Vec<f64> = runs.iter().map(|t| t.states[k].phi.get(mode).norm_sqr()).collect();
                let e = crate::stats::MCEstimate::from_samples(&v).unwrap();
                assert!(e.within(1.0 / lambda, 3.0), "t index {k}, mode {mode:?}: {e:?}");
            }
        }
    }

    #[test]
    fn coupled_runs_share_noise_on_common_modes() {
        let cfg = RunConfig {
            horizon: 0.02,
            output_every: 5,
            ..small_cfg()
        };
        let nu = WeightedMeasure::zero(1.0).unwrap();
        let runs = simulate_coupled(&cfg, &nu, &[1, 2], 0).unwrap();
        let lo = SpectralCutoff::new(2.0, 1).unwrap();
        // without drift the common modes evolve identically
        for (a, b) in runs[0].states.iter().zip(&runs[1].states) {
            let d = project(&b.phi, &lo).sub(&a.phi).unwrap();
            assert!(d.norm_sq().sqrt() < 1e-13);
        }
    }
}
