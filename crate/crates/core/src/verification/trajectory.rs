//! Pathwise properties of the remainder `Y`: the comparison bound for
//! one-signed `ν` and the `∫ Z arctan Z` contraction between two solutions.

use rand::Rng;

use super::per_replica;
use crate::dynamics::{simulate, RunConfig, Scheme, Trajectory};
use crate::error::{invalid, Result, SqeError};
use crate::gaussian::pair_gaussian;
use crate::measure::WeightedMeasure;
use crate::rng::{StreamKey, PERTURBATION_STREAM, PROFILE_STREAM};
use crate::spectral::{heat_semigroup, inverse_transform, Grid, ModeSet, RealField, SpectralCutoff, Spectrum};

/// `∫ z arctan z dx` by grid quadrature.
pub fn contraction_functional(z: &RealField) -> f64 {
    z.map(|v| v * v.atan()).integral()
}

/// `sup |f|` of a band-limited field, sampled on a grid at least eight times
/// finer than its highest mode.
pub fn fine_sup_norm(s: &Spectrum) -> Result<f64> {
    let r = (s.max_radius_sq() as f64).sqrt();
    let m = ((16.0 * r + 2.0).ceil() as usize).next_power_of_two().max(64);
    Ok(inverse_transform(s, Grid::new(m)?)?.sup_norm())
}

/// Random smooth real field on the modes `|l| <= radius`, coefficient
/// variances `exp(-|l|^2 / 2)`, scaled so its sup norm is `sup`.
pub fn smooth_profile<R: Rng + ?Sized>(rng: &mut R, radius: f64, sup: f64, grid: Grid) -> Result<Spectrum> {
    let set = ModeSet::new(&SpectralCutoff::from_radius(radius)?, grid)?;
    let mut s = Spectrum::zeros(grid);
    for e in set.entries() {
        let (a, b) = e.mode;
        let z = pair_gaussian(rng, e, (-0.5 * (a * a + b * b) as f64).exp());
        s.set_hermitian(e.mode, z)?;
    }
    let norm = fine_sup_norm(&s)?;
    if norm == 0.0 {
        return Ok(s);
    }
    Ok(s.scale(sup / norm))
}

fn remainder_values(traj: &Trajectory) -> Result<Vec<(f64, RealField)>> {
    traj.states
        .iter()
        .map(|s| {
            let parts = s.parts.as_ref().ok_or_else(|| {
                SqeError::InvalidConfig("trajectory was not run with the decomposed scheme".into())
            })?;
            Ok((s.time, inverse_transform(&parts.y, s.phi.grid())?))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    /// `(t, max_x σ Y_t, bound, max_x σ S(t)η)` with `σ` the sign of `ν`.
    pub rows: Vec<(f64, f64, f64, f64)>,
    /// Largest `max_x σ Y_t - bound` (negative when the bound holds with room).
    pub max_violation: f64,
    /// Largest `max_x σ Y_t - max_x σ S(t)η - 10 dt t`.
    pub heat_violation: f64,
}

impl ComparisonReport {
    pub fn holds(&self) -> bool {
        self.max_violation <= 0.0
    }
}

fn signed_max(f: &RealField, sigma: f64) -> f64 {
    f.values().iter().fold(f64::NEG_INFINITY, |m, v| m.max(sigma * v))
}

/// Checks `max_x σ Y_t <= ‖η‖_∞ + 10 dt t` along a decomposed trajectory, `σ`
/// the sign of the one-signed measure `ν`. The heat flow of `η` is reported
/// as a sharper reference.
pub fn comparison_bound_check(
    traj: &Trajectory,
    nu: &WeightedMeasure,
    eta: &Spectrum,
    dt: f64,
) -> Result<ComparisonReport> {
    let sigma = nu.sign().ok_or(SqeError::NotOneSigned)?;
    let eta_sup = fine_sup_norm(eta)?;
    let mut rows = Vec::with_capacity(traj.states.len());
    let mut worst = f64::NEG_INFINITY;
    let mut heat_worst = f64::NEG_INFINITY;
    for (t, y) in remainder_values(traj)? {
        let top = signed_max(&y, sigma);
        let bound = eta_sup + 10.0 * dt * t;
        let heat = signed_max(&inverse_transform(&heat_semigroup(eta, t)?, y.grid())?, sigma);
        worst = worst.max(top - bound);
        heat_worst = heat_worst.max(top - heat - 10.0 * dt * t);
        rows.push((t, top, bound, heat));
    }
    Ok(ComparisonReport {
        rows,
        max_violation: worst,
        heat_violation: heat_worst,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    /// `(t, ∫ Z_t arctan Z_t dx)`.
    pub rows: Vec<(f64, f64)>,
    /// Largest `F(t_{k+1}) - F(t_k) - 10 dt (t_{k+1} - t_k)`.
    pub max_increase: f64,
}

impl ContractionReport {
    pub fn holds(&self) -> bool {
        self.max_increase <= 0.0
    }
}

/// Evaluates `∫ Z arctan Z` for `Z = Y - Y'` at every recorded time of two
/// decomposed trajectories and the worst increase between consecutive times.
pub fn contraction_check(a: &Trajectory, b: &Trajectory, dt: f64) -> Result<ContractionReport> {
    let ya = remainder_values(a)?;
    let yb = remainder_values(b)?;
    if ya.len() != yb.len() {
        return Err(invalid("trajectories", "recorded at different times"));
    }
    let mut rows = Vec::with_capacity(ya.len());
    for ((t, u), (s, v)) in ya.iter().zip(&yb) {
        if (t - s).abs() > 1e-12 {
            return Err(invalid("trajectories", "recorded at different times"));
        }
        rows.push((*t, contraction_functional(&u.zip_map(v, |p, q| p - q)?)));
    }
    let max_increase = rows
        .windows(2)
        .map(|w| w[1].1 - w[0].1 - 10.0 * dt * (w[1].0 - w[0].0))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ContractionReport { rows, max_increase })
}

/// Profile `η` used for seed `seed`: smooth on `|l| <= radius` with sup 1.
fn seed_profile(seed: u64, radius: f64, grid: Grid) -> Result<Spectrum> {
    smooth_profile(&mut StreamKey::new(seed, 0).stream(PROFILE_STREAM), radius, 1.0, grid)
}

fn as_modes(s: &Spectrum) -> Vec<((i64, i64), num_complex::Complex64)> {
    s.modes().filter(|(_, z)| z.norm_sqr() > 0.0).collect()
}

/// Decomposed runs for each seed with a random smooth `η`, `‖η‖_∞ = 1`.
pub fn comparison_experiment(
    cfg: &RunConfig,
    nu: &WeightedMeasure,
    seeds: &[u64],
    profile_radius: f64,
) -> Result<Vec<(u64, ComparisonReport)>> {
    let grid = cfg.grid()?;
    let dt = cfg.time_step()?;
    per_replica(seeds.len(), |i| {
        let seed = seeds[i as usize];
        let eta = seed_profile(seed, profile_radius, grid)?;
        let run = RunConfig {
            seed,
            eta: as_modes(&eta),
            ..cfg.clone()
        };
        let traj = simulate(&run, nu, Scheme::Decomposed)?;
        Ok((seed, comparison_bound_check(&traj, nu, &eta, dt)?))
    })
}

/// Pairs of decomposed runs sharing `X` whose initial remainders differ by a
/// random smooth perturbation of sup norm `perturbation`.
pub fn contraction_experiment(
    cfg: &RunConfig,
    nu: &WeightedMeasure,
    seeds: &[u64],
    profile_radius: f64,
    perturbation: f64,
) -> Result<Vec<(u64, ContractionReport)>> {
    let grid = cfg.grid()?;
    let dt = cfg.time_step()?;
    per_replica(seeds.len(), |i| {
        let seed = seeds[i as usize];
        let eta = seed_profile(seed, profile_radius, grid)?;
        let mut rng = StreamKey::new(seed, 0).stream(PERTURBATION_STREAM);
        let bump = smooth_profile(&mut rng, profile_radius, perturbation, grid)?;
        let run = |e: &Spectrum| {
            simulate(
                &RunConfig {
                    seed,
                    eta: as_modes(e),
                    ..cfg.clone()
                },
                nu,
                Scheme::Decomposed,
            )
        };
        let a = run(&eta)?;
        let b = run(&eta.add(&bump)?)?;
        Ok((seed, contraction_check(&a, &b, dt)?))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn functional_examples() {
        let grid = Grid::new(16).unwrap();
        assert_eq!(contraction_functional(&RealField::zeros(grid)), 0.0);
        assert_relative_eq!(
            contraction_functional(&RealField::constant(grid, 1.0)),
            4.0 * PI * PI * PI / 4.0,
            epsilon = 1e-12
        );
        let z = RealField::from_fn(grid, |x, y| (x + 2.0 * y).sin() * 1.7);
        let neg = z.map(|v| -v);
        assert_eq!(contraction_functional(&z), contraction_functional(&neg));
        let smaller = z.map(|v| 0.5 * v);
        assert!(contraction_functional(&smaller) <= contraction_functional(&z));
    }

    #[test]
    fn profile_has_requested_sup() {
        let grid = Grid::new(32).unwrap();
        let s = smooth_profile(&mut StreamKey::new(1, 0).stream(PROFILE_STREAM), 4.0, 1.0, grid).unwrap();
        assert_relative_eq!(fine_sup_norm(&s).unwrap(), 1.0, epsilon = 1e-12);
        assert!(inverse_transform(&s, grid).unwrap().sup_norm() <= 1.0 + 1e-12);
        assert!(s.hermitian_defect() < 1e-15);
    }

    #[test]
    fn comparison_needs_one_signed_measure() {
        let cfg = RunConfig { horizon: 0.01, ..RunConfig::default() };
        let nu = WeightedMeasure::sinh(1.0).unwrap();
        let traj = simulate(&cfg, &nu, Scheme::Decomposed).unwrap();
        assert!(matches!(
            comparison_bound_check(&traj, &nu, &Spectrum::zeros(traj.states[0].phi.grid()), 1e-3),
            Err(SqeError::NotOneSigned)
        ));
        let full = simulate(&cfg, &nu, Scheme::Full).unwrap();
        assert!(contraction_check(&full, &full, 1e-3).is_err());
    }

    #[test]
    fn zero_profile_exponential_model_stays_nonpositive() {
        let nu = WeightedMeasure::dirac(1.0).unwrap();
        let cfg = RunConfig { horizon: 0.2, output_every: 20, ..RunConfig::default() };
        let traj = simulate(&cfg, &nu, Scheme::Decomposed).unwrap();
        let zero = Spectrum::zeros(traj.states[0].phi.grid());
        let rep = comparison_bound_check(&traj, &nu, &zero, 1e-3).unwrap();
        assert!(rep.holds() && rep.heat_violation <= 0.0, "{rep:?}");
        let mirrored = nu.reflected();
        let traj = simulate(&cfg, &mirrored, Scheme::Decomposed).unwrap();
        assert!(comparison_bound_check(&traj, &mirrored, &zero, 1e-3).unwrap().holds());
    }
}
