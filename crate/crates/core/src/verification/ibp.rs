//! Integration by parts for the truncated Gibbs measure.
//!
//! With `𝓔(F, G) = ½ E⟨∇F, ∇G⟩` and the generator
//! `L F = ½ Tr ∇²F - ½⟨(1 - Δ)φ, ∇F⟩ - ½⟨∫ α exp_N^◇(αφ) ν(dα), ∇F⟩`,
//! the identity `𝓔(F, G) = -E[G · L F]` holds exactly at finite cutoff. The
//! defect `½⟨∇F, ∇G⟩ + G · L F` therefore has mean zero.

use super::functional::CylindricalFunctional;
use super::gibbs::RejectionSampler;
use super::per_replica;
use crate::dynamics::{drift, DriftOptions};
use crate::error::{Result, SqeError};
use crate::measure::WeightedMeasure;
use crate::rng::{StreamKey, REJECTION_STREAM};
use crate::spectral::{project, Grid, SpectralCutoff};
use crate::stats::MCEstimate;

#[derive(Clone, Debug, PartialEq)]
pub struct IbpReport {
    /// `𝓔(F, G)`.
    pub energy: MCEstimate,
    /// `E[G · L F]`.
    pub generator: MCEstimate,
    /// `𝓔(F, G) + E[G · L F]` from per-sample sums.
    pub defect: MCEstimate,
    pub acceptance_rate: f64,
}

/// Monte Carlo estimate of the integration-by-parts defect over `replicas`
/// exact samples of `μ^(ν)_N`. Directions must lie inside the cutoff.
#[allow(clippy::too_many_arguments)]
pub fn dirichlet_ibp_check(
    f: &CylindricalFunctional,
    g: &CylindricalFunctional,
    nu: &WeightedMeasure,
    c: &SpectralCutoff,
    grid: Grid,
    seed: u64,
    replicas: usize,
    min_rate: f64,
) -> Result<IbpReport> {
    let f = f.on_grid(grid)?;
    let g = g.on_grid(grid)?;
    for d in f.directions().iter().chain(g.directions()) {
        if project(d, c) != *d {
            return Err(SqeError::InvalidConfig(
                "test directions must be band-limited inside the cutoff".into(),
            ));
        }
    }
    let template = RejectionSampler::new(nu, c, grid, min_rate)?;
    let opts = DriftOptions::default();
    let rows = per_replica(replicas, |r| {
        let mut sampler = template.clone();
        let phi = sampler.sample(&mut StreamKey::new(seed, r).stream(REJECTION_STREAM))?;
        let grad_f = f.gradient(&phi)?;
        let grad_g = g.gradient(&phi)?;
        let energy = 0.5 * grad_f.inner(&grad_g);
        let restoring = phi.multiply_radial(|r2| 1.0 + r2).inner(&grad_f);
        let interaction = drift(&phi, nu, c, grid, &opts)?.spectrum.inner(&grad_f);
        let lf = 0.5 * f.hessian_trace(&phi)? - 0.5 * restoring + interaction;
        let gl = g.value(&phi)? * lf;
        Ok((energy, gl, sampler.attempts()))
    })?;
    let energy: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let generator: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let defect: Vec<f64> = rows.iter().map(|r| r.0 + r.1).collect();
    let attempts: u64 = rows.iter().map(|r| r.2).sum();
    Ok(IbpReport {
        energy: MCEstimate::from_samples(&energy)?,
        generator: MCEstimate::from_samples(&generator)?,
        defect: MCEstimate::from_samples(&defect)?,
        acceptance_rate: replicas as f64 / attempts as f64,
    })
}
