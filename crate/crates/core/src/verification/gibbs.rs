//! Exact sampling of the truncated Gibbs measure and the invariance test.

use std::f64::consts::PI;

use rand::Rng;

use super::functional::CylindricalFunctional;
use super::per_replica;
use crate::dynamics::{ExponentConvention, RunConfig, Scheme, Simulation};
use crate::error::{Result, SqeError};
use crate::gaussian::{renorm_constant, sample_gff_on, wick_exp_of_values, DEFAULT_EXPONENT_CLAMP};
use crate::measure::{Atom, WeightedMeasure};
use crate::rng::{StreamKey, REJECTION_STREAM};
use crate::spectral::{inverse_transform, project, Grid, ModeSet, SpectralCutoff, Spectrum};
use crate::stats::MCEstimate;

/// Acceptance rate below which the rejection sampler gives up.
pub const DEFAULT_MIN_ACCEPTANCE: f64 = 1e-4;

/// Attempts before the acceptance rate is compared with the floor.
const WARMUP_ATTEMPTS: u64 = 200;

/// Largest real dimension of the truncated space accepted by the sampler.
const MAX_REAL_DIMENSION: usize = 64;

fn potential_with(phi: &Spectrum, nodes: &[Atom], cn: f64, c: &SpectralCutoff, grid: Grid) -> Result<f64> {
    let u = inverse_transform(&project(phi, c), grid)?;
    Ok(nodes
        .iter()
        .map(|n| n.weight * wick_exp_of_values(&u, n.alpha, cn, DEFAULT_EXPONENT_CLAMP).0.integral())
        .sum())
}

/// `V(φ) = Σ_m w_m ∫ exp_N^◇(α_m φ) dx`, integrated by grid quadrature.
pub fn potential(phi: &Spectrum, nu: &WeightedMeasure, c: &SpectralCutoff, grid: Grid) -> Result<f64> {
    potential_with(phi, &nu.nodes(), renorm_constant(c).value, c, grid)
}

/// `inf_s 4π² Σ_m w_m exp(α_m s - α_m² C / 2)`.
///
/// By Jensen on the grid average this lower-bounds `V(φ)` for every field,
/// with `s` the spatial mean of `P_N φ`.
pub fn potential_floor(nu: &WeightedMeasure, c: &SpectralCutoff) -> f64 {
    let cn = renorm_constant(c).value;
    let nodes = nu.nodes();
    let area = 4.0 * PI * PI;
    let h = |s: f64| -> f64 {
        nodes
            .iter()
            .map(|n| n.weight * (n.alpha * s - 0.5 * n.alpha * n.alpha * cn).exp())
            .sum::<f64>()
            * area
    };
    let dh = |s: f64| -> f64 {
        nodes
            .iter()
            .map(|n| n.weight * n.alpha * (n.alpha * s - 0.5 * n.alpha * n.alpha * cn).exp())
            .sum()
    };
    let has_pos = nodes.iter().any(|n| n.alpha > 0.0);
    let has_neg = nodes.iter().any(|n| n.alpha < 0.0);
    if !(has_pos && has_neg) {
        // the infimum is approached at ∓∞ and only α = 0 mass survives
        return area * nodes.iter().filter(|n| n.alpha == 0.0).map(|n| n.weight).sum::<f64>();
    }
    // h is convex; bisect on the sign of h'
    let (mut lo, mut hi) = (-1.0, 1.0);
    while dh(lo) > 0.0 {
        lo *= 2.0;
    }
    while dh(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dh(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    h(0.5 * (lo + hi))
}

/// Rejection sampler for `μ^(ν)_N ∝ e^{-V} P_N μ0`.
///
/// Proposals are accepted with probability `exp(-(V - V_floor))`, with
/// `V_floor` from [`potential_floor`]; the target law is unchanged and the
/// normalization is `Z = rate · exp(-V_floor)`.
#[derive(Clone, Debug)]
pub struct RejectionSampler {
    cutoff: SpectralCutoff,
    grid: Grid,
    modes: ModeSet,
    nodes: Vec<Atom>,
    cn: f64,
    floor: f64,
    min_rate: f64,
    attempts: u64,
    accepted: u64,
}

impl RejectionSampler {
    pub fn new(nu: &WeightedMeasure, c: &SpectralCutoff, grid: Grid, min_rate: f64) -> Result<Self> {
        let modes = ModeSet::new(c, grid)?;
        if modes.real_dimension() > MAX_REAL_DIMENSION {
            return Err(SqeError::InvalidConfig(format!(
                "rejection sampling needs a small cutoff; {} real modes exceed {MAX_REAL_DIMENSION}",
                modes.real_dimension()
            )));
        }
        if !(min_rate > 0.0 && min_rate < 1.0) {
            return Err(SqeError::InvalidConfig(format!(
                "acceptance floor must lie in (0, 1), got {min_rate}"
            )));
        }
        Ok(Self {
            cutoff: *c,
            grid,
            modes,
            nodes: nu.nodes(),
            cn: renorm_constant(c).value,
            floor: potential_floor(nu, c),
            min_rate,
            attempts: 0,
            accepted: 0,
        })
    }

    pub fn potential_floor(&self) -> f64 {
        self.floor
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    /// Estimate of `Z = E_{μ0}[e^{-V}]`.
    pub fn normalization(&self) -> f64 {
        self.acceptance_rate() * (-self.floor).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Spectrum> {
        loop {
            let phi = sample_gff_on(rng, &self.modes);
            self.attempts += 1;
            let accept = if self.nodes.is_empty() {
                true
            } else {
                let v = potential_with(&phi, &self.nodes, self.cn, &self.cutoff, self.grid)?;
                let u: f64 = rng.random();
                u < (-(v - self.floor)).exp()
            };
            if accept {
                self.accepted += 1;
                return Ok(phi);
            }
            if self.attempts >= WARMUP_ATTEMPTS && self.acceptance_rate() < self.min_rate {
                return Err(SqeError::AcceptanceCollapse {
                    rate: self.acceptance_rate(),
                    floor: self.min_rate,
                });
            }
        }
    }
}

/// One exact draw from `μ^(ν)_N`.
pub fn rejection_sample_gibbs<R: Rng + ?Sized>(
    nu: &WeightedMeasure,
    c: &SpectralCutoff,
    grid: Grid,
    rng: &mut R,
) -> Result<Spectrum> {
    RejectionSampler::new(nu, c, grid, DEFAULT_MIN_ACCEPTANCE)?.sample(rng)
}

/// Law comparison for one observable.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableComparison {
    pub name: String,
    pub initial: MCEstimate,
    pub terminal: MCEstimate,
    /// `E[F(Φ_T) - F(Φ_0)]` from paired replicas.
    pub difference: MCEstimate,
    /// `E[F(Φ_2T) - F(Φ_0)]`, when the doubled horizon was run.
    pub doubled: Option<MCEstimate>,
}

impl ObservableComparison {
    /// The `t = T` mean agrees with `t = 0` within `k` paired SE.
    pub fn agrees(&self, k: f64) -> bool {
        self.difference.within(0.0, k)
    }

    /// `T` and `2T` discrepancies differ by at most `k` combined SE.
    pub fn doubling_consistent(&self, k: f64) -> bool {
        match &self.doubled {
            None => true,
            Some(d) => {
                let se = (d.std_error.powi(2) + self.difference.std_error.powi(2)).sqrt();
                (d.mean - self.difference.mean).abs() <= k * se
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub observables: Vec<ObservableComparison>,
    pub acceptance_rate: f64,
    pub normalization: f64,
    pub horizon: f64,
}

/// Starts `cfg.replicas` exact Gibbs samples, evolves each with the projected
/// full scheme to `T = cfg.horizon` (and `2T` if `doubling`) and compares
/// observable means.
pub fn invariance_test(
    nu: &WeightedMeasure,
    cfg: &RunConfig,
    observables: &[(String, CylindricalFunctional)],
    doubling: bool,
    min_rate: f64,
) -> Result<InvarianceReport> {
    if !cfg.drift_projected || cfg.exponent != ExponentConvention::Projected {
        return Err(SqeError::InvalidConfig(
            "invariance requires the projected drift and the projected exponent".into(),
        ));
    }
    if observables.is_empty() {
        return Err(SqeError::InvalidConfig("no observables".into()));
    }
    let cutoff = cfg.cutoff()?;
    let grid = cfg.grid()?;
    let template = RejectionSampler::new(nu, &cutoff, grid, min_rate)?;
    let obs: Vec<CylindricalFunctional> = observables
        .iter()
        .map(|(_, f)| f.on_grid(grid))
        .collect::<Result<_>>()?;
    let steps = cfg.steps()?;
    let cfg = RunConfig {
        random_initial: false,
        eta: Vec::new(),
        ..cfg.clone()
    };
    let eval = |phi: &Spectrum| obs.iter().map(|f| f.value(phi)).collect::<Result<Vec<f64>>>();

    struct Row {
        values: [Vec<f64>; 3],
        attempts: u64,
    }
    let rows = per_replica(cfg.replicas, |r| {
        let key = StreamKey::new(cfg.seed, r);
        let mut sampler = template.clone();
        let phi0 = sampler.sample(&mut key.stream(REJECTION_STREAM))?;
        let v0 = eval(&phi0)?;
        let mut sim = Simulation::from_initial(&cfg, nu, Scheme::Full, r, phi0)?;
        for _ in 0..steps {
            sim.step()?;
        }
        let v1 = eval(&sim.state().phi)?;
        let v2 = if doubling {
            for _ in 0..steps {
                sim.step()?;
            }
            eval(&sim.state().phi)?
        } else {
            Vec::new()
        };
        Ok(Row {
            values: [v0, v1, v2],
            attempts: sampler.attempts(),
        })
    })?;

    let attempts: u64 = rows.iter().map(|r| r.attempts).sum();
    let acceptance_rate = rows.len() as f64 / attempts as f64;
    let column = |t: usize, k: usize| rows.iter().map(|r| r.values[t][k]).collect::<Vec<f64>>();
    let mut out = Vec::with_capacity(obs.len());
    for (k, (name, _)) in observables.iter().enumerate() {
        let (c0, c1) = (column(0, k), column(1, k));
        let doubled = if doubling {
            Some(MCEstimate::paired_difference(&column(2, k), &c0)?)
        } else {
            None
        };
        out.push(ObservableComparison {
            name: name.clone(),
            initial: MCEstimate::from_samples(&c0)?,
            terminal: MCEstimate::from_samples(&c1)?,
            difference: MCEstimate::paired_difference(&c1, &c0)?,
            doubled,
        });
    }
    Ok(InvarianceReport {
        observables: out,
        acceptance_rate,
        normalization: acceptance_rate * (-template.potential_floor()).exp(),
        horizon: steps as f64 * cfg.time_step()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TORUS_AREA;
    use crate::verification::standard_observables;
    use approx::assert_relative_eq;

    fn k1() -> (SpectralCutoff, Grid) {
        (SpectralCutoff::from_radius(1.0).unwrap(), Grid::new(8).unwrap())
    }

    #[test]
    fn floor_bounds_the_potential() {
        let (c, grid) = k1();
        let nu = WeightedMeasure::sinh(1.0).unwrap();
        let floor = potential_floor(&nu, &c);
        let cn = renorm_constant(&c).value;
        assert_relative_eq!(floor, TORUS_AREA * (-0.5 * cn).exp(), epsilon = 1e-12);
        let set = ModeSet::new(&c, grid).unwrap();
        let mut rng = StreamKey::new(1, 0).stream(0);
        for _ in 0..200 {
            let phi = sample_gff_on(&mut rng, &set).scale(3.0);
            assert!(potential(&phi, &nu, &c, grid).unwrap() >= floor - 1e-9);
        }
        assert_eq!(potential_floor(&WeightedMeasure::dirac(1.0).unwrap(), &c), 0.0);
        let lopsided = WeightedMeasure::new(
            1.0,
            vec![Atom { alpha: 1.0, weight: 0.9 }, Atom { alpha: -0.5, weight: 0.1 }],
            vec![],
        )
        .unwrap();
        let f = potential_floor(&lopsided, &c);
        // brute-force minimum over s
        let brute = (-4000..4000)
            .map(|i| {
                let s = i as f64 * 1e-3;
                TORUS_AREA
                    * (0.9 * (s - 0.5 * cn).exp() + 0.1 * (-0.5 * s - 0.125 * cn).exp())
            })
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(f, brute, epsilon = 1e-6);
    }

    #[test]
    fn zero_measure_always_accepts() {
        let (c, grid) = k1();
        let mut s = RejectionSampler::new(&WeightedMeasure::zero(1.0).unwrap(), &c, grid, 0.5).unwrap();
        let mut rng = StreamKey::new(2, 0).stream(REJECTION_STREAM);
        for _ in 0..100 {
            s.sample(&mut rng).unwrap();
        }
        assert_eq!(s.acceptance_rate(), 1.0);
    }

    #[test]
    fn mean_potential_under_free_field() {
        let (c, grid) = k1();
        let nu = WeightedMeasure::sinh(1.0).unwrap();
        let set = ModeSet::new(&c, grid).unwrap();
        let mut rng = StreamKey::new(3, 0).stream(0);
        let v: Vec<f64> = (0..20_000)
            .map(|_| potential(&sample_gff_on(&mut rng, &set), &nu, &c, grid).unwrap())
            .collect();
        let e = MCEstimate::from_samples(&v).unwrap();
        assert!(e.within(TORUS_AREA * nu.total_mass(), 3.0), "{e:?}");
    }

    #[test]
    fn collapse_is_reported() {
        let (c, grid) = k1();
        let heavy = WeightedMeasure::new(1.0, vec![Atom { alpha: 1.0, weight: 50.0 }], vec![]).unwrap();
        let mut s = RejectionSampler::new(&heavy, &c, grid, 0.9).unwrap();
        let err = s.sample(&mut StreamKey::new(4, 0).stream(REJECTION_STREAM));
        assert!(matches!(err, Err(SqeError::AcceptanceCollapse { .. })));
    }

    #[test]
    fn free_field_is_invariant() {
        let nu = WeightedMeasure::zero(1.0).unwrap();
        let cfg = RunConfig {
            grid_size: Some(8),
            a: 1.01,
            n: 0,
            dt: Some(1e-2),
            horizon: 0.5,
            replicas: 2000,
            seed: 11,
            ..RunConfig::default()
        };
        let grid = cfg.grid().unwrap();
        let rep = invariance_test(&nu, &cfg, &standard_observables(grid).unwrap(), true, 0.5).unwrap();
        assert_eq!(rep.acceptance_rate, 1.0);
        for o in &rep.observables {
            assert!(o.agrees(3.0) && o.doubling_consistent(3.0), "{o:?}");
        }
    }

    #[test]
    fn invariance_rejects_unprojected_drift() {
        let cfg = RunConfig { drift_projected: false, ..RunConfig::default() };
        let grid = cfg.grid().unwrap();
        let obs = standard_observables(grid).unwrap();
        assert!(invariance_test(&WeightedMeasure::zero(1.0).unwrap(), &cfg, &obs, false, 0.5).is_err());
    }
}
