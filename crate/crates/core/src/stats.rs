//! Monte Carlo estimates, paired differences and the bootstrap of a fitted
//! geometric decay ratio.

use rand::Rng;

use crate::error::{Result, SqeError};

/// Sample mean with its standard error `sd / √n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicas: usize,
}

impl MCEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(SqeError::TooFewReplicas(n));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            replicas: n,
        })
    }

    /// Estimate of `E[a - b]` from paired samples.
    pub fn paired_difference(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(SqeError::DimensionMismatch {
                expected: a.len(),
                actual: b.len(),
            });
        }
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        Self::from_samples(&d)
    }

    /// `|mean - target| / SE`; infinite when the SE vanishes and the mean
    /// misses the target.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }

    /// `|mean - target| <= k · SE`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Geometric ratio `r` of a least-squares fit `log m_i ≈ a + i log r`.
/// Requires at least two positive means.
pub fn fit_geometric_ratio(means: &[f64]) -> Result<f64> {
    if means.len() < 2 {
        return Err(SqeError::TooFewReplicas(means.len()));
    }
    if means.iter().any(|&m| !(m > 0.0)) {
        return Err(SqeError::InvalidConfig(
            "geometric fit needs strictly positive means".into(),
        ));
    }
    let n = means.len() as f64;
    let xbar = (n - 1.0) / 2.0;
    let logs: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let ybar = logs.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in logs.iter().enumerate() {
        let dx = i as f64 - xbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    Ok((sxy / sxx).exp())
}

/// Fitted ratio with its bootstrap standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioFit {
    pub ratio: f64,
    pub ci: f64,
    pub resamples: usize,
}

/// Fits the geometric ratio of column means of `table[replica][level]` and
/// bootstraps it by resampling whole replicas, so the correlation between
/// levels is kept. Resamples whose means are not all positive are skipped.
pub fn bootstrap_ratio<R: Rng + ?Sized>(
    table: &[Vec<f64>],
    resamples: usize,
    rng: &mut R,
) -> Result<RatioFit> {
    let n = table.len();
    if n < 2 {
        return Err(SqeError::TooFewReplicas(n));
    }
    let levels = table[0].len();
    if table.iter().any(|row| row.len() != levels) {
        return Err(SqeError::InvalidConfig("ragged replica table".into()));
    }
    let means = |pick: &mut dyn FnMut() -> usize| {
        let mut m = vec![0.0; levels];
        for _ in 0..n {
            let row = &table[pick()];
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|a| *a /= n as f64);
        m
    };
    let mut k = 0;
    let ratio = fit_geometric_ratio(&means(&mut || {
        k += 1;
        k - 1
    }))?;
    let mut fits = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        if let Ok(r) = fit_geometric_ratio(&means(&mut || rng.random_range(0..n))) {
            fits.push(r);
        }
    }
    let ci = if fits.len() < 2 {
        f64::INFINITY
    } else {
        let mu = fits.iter().sum::<f64>() / fits.len() as f64;
        (fits.iter().map(|r| (r - mu).powi(2)).sum::<f64>() / (fits.len() - 1) as f64).sqrt()
    };
    Ok(RatioFit {
        ratio,
        ci,
        resamples: fits.len(),
    })
}
