//! Statistical and deterministic checks of the simulator against Gaussian
//! calculus, the Gibbs measure and the pathwise properties of the remainder.

mod functional;
mod gibbs;
mod ibp;
mod sn;
mod trajectory;

pub use functional::{standard_directions, standard_observables, CylindricalFunctional, Outer};
pub use gibbs::{
    invariance_test, potential, potential_floor, rejection_sample_gibbs, InvarianceReport,
    ObservableComparison, RejectionSampler, DEFAULT_MIN_ACCEPTANCE,
};
pub use ibp::{dirichlet_ibp_check, IbpReport};
pub use sn::{sn_statistic, sn_statistic_sweep, SnConfig, SnReport, SnRow};
pub use trajectory::{
    comparison_bound_check, comparison_experiment, contraction_check, contraction_experiment,
    contraction_functional, fine_sup_norm, smooth_profile, ComparisonReport, ContractionReport,
};

use rayon::prelude::*;

use crate::error::Result;

/// Runs `f` for replicas `0..n` on the current rayon pool and returns the
/// results in replica order.
pub(crate) fn per_replica<T: Send>(n: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n as u64).into_par_iter().map(f).collect()
}
