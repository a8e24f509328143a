//! The statistic
//! `S_N = ∫_0^T ∫ 2^{p(α)N} C(α)^{p(α)} ‖𝒳^{α,N+1}_t - 𝒳^{α,N}_t‖^{p(α)}_{H^{-1+ε}} ν(dα) dt`
//! with `p(α) = p α0 / |α|` and `C(α) = κ|α|`.
//!
//! `X_t` is stationary with law `μ0`, so the time integral is replaced by `T`
//! times one free-field draw per replica. All cutoffs of a replica are
//! projections of one draw at the finest cutoff.

use std::f64::consts::PI;

use super::per_replica;
use crate::error::{invalid, Result, SqeError};
use crate::gaussian::{
    projected_values, renorm_constant, sample_gff_on, wick_exp_diff_norm_oracle,
    wick_exp_of_values, DEFAULT_EXPONENT_CLAMP,
};
use crate::measure::WeightedMeasure;
use crate::rng::{StreamKey, BOOTSTRAP_STREAM, INITIAL_STREAM};
use crate::spectral::{forward_field, sobolev_norm_sq, Grid, ModeSet, SpectralCutoff};
use crate::stats::{bootstrap_ratio, MCEstimate, RatioFit};

#[derive(Clone, Debug, PartialEq)]
pub struct SnConfig {
    pub p: f64,
    pub epsilon: f64,
    /// Slope `κ` of the weight `C(α) = κ|α|`.
    pub kappa: f64,
    pub a: f64,
    pub n_min: u32,
    pub n_max: u32,
    pub horizon: f64,
    pub grid_size: Option<usize>,
    pub oversampling: f64,
    pub replicas: usize,
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for SnConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            epsilon: 0.1,
            kappa: 1.0,
            a: 2.0,
            n_min: 1,
            n_max: 4,
            horizon: 1.0,
            grid_size: None,
            oversampling: 2.0,
            replicas: 200,
            bootstrap: 200,
            seed: 0,
        }
    }
}

impl SnConfig {
    /// `p(α) = p α0 / |α|`.
    pub fn exponent(&self, alpha: f64, alpha0: f64) -> f64 {
        self.p * alpha0 / alpha.abs()
    }

    /// Grid that resolves the finest cutoff `A^{n_max + 1}`.
    pub fn grid(&self) -> Result<Grid> {
        match self.grid_size {
            Some(m) => Grid::new(m),
            None => Ok(Grid::for_cutoff(&SpectralCutoff::new(self.a, self.n_max + 1)?, self.oversampling)),
        }
    }

    pub fn validate(&self, nu: &WeightedMeasure) -> Result<()> {
        let a0 = nu.alpha0();
        if !nu.l2_regime() {
            return Err(SqeError::InvalidMeasure(
                "the statistic needs the L2 regime alpha0^2 < 4π".into(),
            ));
        }
        if !(self.p >= 2.0 && self.p * self.p * a0 * a0 / 4.0 < 4.0 * PI) {
            return Err(invalid(
                "p",
                format!("must lie in [2, {}), got {}", (16.0 * PI).sqrt() / a0, self.p),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", format!("must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.kappa >= 0.0) {
            return Err(invalid("kappa", "must be >= 0"));
        }
        if self.n_min > self.n_max {
            return Err(invalid("n_min", "must not exceed n_max"));
        }
        if !(self.horizon > 0.0) {
            return Err(invalid("T", "must be > 0"));
        }
        if self.replicas < 2 {
            return Err(SqeError::TooFewReplicas(self.replicas));
        }
        let grid = self.grid()?;
        if !grid.resolves(&SpectralCutoff::new(self.a, self.n_max + 1)?) {
            return Err(SqeError::InvalidGrid(format!(
                "{0}x{0} grid does not resolve the finest cutoff",
                grid.size()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnRow {
    pub n: u32,
    pub estimate: MCEstimate,
    /// Exact mean, available when every node has `p(α) = 2`.
    pub oracle: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnReport {
    pub epsilon: f64,
    pub rows: Vec<SnRow>,
    /// Geometric ratio over the rows with its bootstrap spread.
    pub fit: Option<RatioFit>,
}

impl SnReport {
    /// `ratio + 2 · CI < 1`.
    pub fn decays(&self) -> bool {
        self.fit.is_some_and(|f| f.ratio + 2.0 * f.ci < 1.0)
    }

    /// Every row with an oracle agrees with it within `k` SE.
    pub fn matches_oracle(&self, k: f64) -> bool {
        self.rows
            .iter()
            .all(|r| r.oracle.is_none_or(|o| r.estimate.within(o, k)))
    }
}

/// Runs [`sn_statistic`] for several `ε` on shared draws.
pub fn sn_statistic_sweep(cfg: &SnConfig, epsilons: &[f64], nu: &WeightedMeasure) -> Result<Vec<SnReport>> {
    for &e in epsilons {
        SnConfig { epsilon: e, ..cfg.clone() }.validate(nu)?;
    }
    cfg.validate(nu)?;
    let grid = cfg.grid()?;
    let alpha0 = nu.alpha0();
    let nodes: Vec<_> = nu
        .nodes()
        .into_iter()
        .filter(|n| n.alpha != 0.0 && cfg.kappa > 0.0)
        .collect();
    let levels: Vec<u32> = (cfg.n_min..=cfg.n_max).collect();
    let cutoffs: Vec<SpectralCutoff> = (cfg.n_min..=cfg.n_max + 1)
        .map(|n| SpectralCutoff::new(cfg.a, n))
        .collect::<Result<_>>()?;
    let cns: Vec<f64> = cutoffs.iter().map(|c| renorm_constant(c).value).collect();
    let top = ModeSet::new(cutoffs.last().expect("nonempty"), grid)?;

    // samples[replica][eps][level]
    let samples = per_replica(cfg.replicas, |r| {
        let mut out = vec![vec![0.0; levels.len()]; epsilons.len()];
        if nodes.is_empty() {
            return Ok(out);
        }
        let phi = sample_gff_on(&mut StreamKey::new(cfg.seed, r).stream(INITIAL_STREAM), &top);
        let u: Vec<_> = cutoffs
            .iter()
            .map(|c| projected_values(&phi, c, grid))
            .collect::<Result<_>>()?;
        for (i, &n) in levels.iter().enumerate() {
            for node in &nodes {
                let hi = wick_exp_of_values(&u[i + 1], node.alpha, cns[i + 1], DEFAULT_EXPONENT_CLAMP).0;
                let lo = wick_exp_of_values(&u[i], node.alpha, cns[i], DEFAULT_EXPONENT_CLAMP).0;
                let d = forward_field(&hi.zip_map(&lo, |a, b| a - b)?);
                let pa = cfg.exponent(node.alpha, alpha0);
                let scale = cfg.horizon
                    * node.weight
                    * 2f64.powf(pa * n as f64)
                    * (cfg.kappa * node.alpha.abs()).powf(pa);
                for (k, &eps) in epsilons.iter().enumerate() {
                    let norm_sq = sobolev_norm_sq(&d, eps - 1.0);
                    out[k][i] += scale * norm_sq.powf(0.5 * pa);
                }
            }
        }
        Ok(out)
    })?;

    let all_quadratic = nodes
        .iter()
        .all(|n| (cfg.exponent(n.alpha, alpha0) - 2.0).abs() < 1e-12);
    let mut reports = Vec::with_capacity(epsilons.len());
    for (k, &eps) in epsilons.iter().enumerate() {
        let table: Vec<Vec<f64>> = samples.iter().map(|s| s[k].clone()).collect();
        let mut rows = Vec::with_capacity(levels.len());
        for (i, &n) in levels.iter().enumerate() {
            let col: Vec<f64> = table.iter().map(|row| row[i]).collect();
            let oracle = if all_quadratic {
                let mut sum = 0.0;
                for node in &nodes {
                    sum += node.weight
                        * 4f64.powi(n as i32)
                        * (cfg.kappa * node.alpha).powi(2)
                        * wick_exp_diff_norm_oracle(node.alpha, &cutoffs[i], 1.0 - eps, grid)?;
                }
                Some(cfg.horizon * sum)
            } else {
                None
            };
            rows.push(SnRow {
                n,
                estimate: MCEstimate::from_samples(&col)?,
                oracle,
            });
        }
        let fit = if levels.len() >= 2 && rows.iter().all(|r| r.estimate.mean > 0.0) {
            let mut rng = StreamKey::new(cfg.seed, 0).stream(BOOTSTRAP_STREAM);
            Some(bootstrap_ratio(&table, cfg.bootstrap, &mut rng)?)
        } else {
            None
        };
        reports.push(SnReport { epsilon: eps, rows, fit });
    }
    Ok(reports)
}

/// Per-`N` estimates of `E[S_N]` for `cfg.epsilon` with the fitted decay ratio.
pub fn sn_statistic(cfg: &SnConfig, nu: &WeightedMeasure) -> Result<SnReport> {
    Ok(sn_statistic_sweep(cfg, &[cfg.epsilon], nu)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SnConfig {
        SnConfig {
            a: 2.0,
            n_min: 1,
            n_max: 2,
            replicas: 400,
            bootstrap: 50,
            seed: 9,
            ..SnConfig::default()
        }
    }

    #[test]
    fn identical_mode_sets_give_zero() {
        let cfg = SnConfig {
            a: 1.01,
            n_min: 1,
            n_max: 1,
            grid_size: Some(8),
            replicas: 5,
            ..SnConfig::default()
        };
        let rep = sn_statistic(&cfg, &WeightedMeasure::sinh(1.0).unwrap()).unwrap();
        assert_eq!(rep.rows[0].estimate.mean, 0.0);
        assert_eq!(rep.rows[0].oracle, Some(0.0));
    }

    #[test]
    fn zero_weight_gives_zero() {
        let cfg = SnConfig { kappa: 0.0, ..small() };
        let rep = sn_statistic(&cfg, &WeightedMeasure::sinh(1.0).unwrap()).unwrap();
        assert!(rep.rows.iter().all(|r| r.estimate.mean == 0.0));
        assert!(rep.fit.is_none());
    }

    #[test]
    fn quadratic_case_matches_oracle() {
        let rep = sn_statistic(&small(), &WeightedMeasure::sinh(1.0).unwrap()).unwrap();
        assert!(rep.matches_oracle(3.0), "{rep:?}");
        assert!(rep.rows.iter().all(|r| r.oracle.is_some()));
    }

    #[test]
    fn p_range_is_enforced() {
        let nu = WeightedMeasure::sinh(1.0).unwrap();
        assert!(SnConfig { p: 1.5, ..small() }.validate(&nu).is_err());
        assert!(SnConfig { p: 7.2, ..small() }.validate(&nu).is_err());
        assert!(SnConfig { p: 7.0, ..small() }.validate(&nu).is_ok());
        assert!(SnConfig { epsilon: 0.0, ..small() }.validate(&nu).is_err());
    }
}
