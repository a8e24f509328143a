//! The coupling measure `ν` on `[-α0, α0]`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Result, SqeError};

/// Default number of Gauss-Legendre nodes for a continuous density.
pub const DEFAULT_QUADRATURE_NODES: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// One point mass `weight · δ_alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub alpha: f64,
    pub weight: f64,
}

/// Finite nonnegative measure `ν` on `[-α0, α0]`: atoms plus a quadrature of a
/// tabulated density. Quadrature nodes carry `w_i ρ(α_i)` as their weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMeasure {
    alpha0: f64,
    atoms: Vec<Atom>,
    density: Vec<Atom>,
}

impl WeightedMeasure {
    pub fn new(alpha0: f64, atoms: Vec<Atom>, density: Vec<Atom>) -> Result<Self> {
        if !(alpha0 > 0.0) || !alpha0.is_finite() {
            return Err(SqeError::InvalidMeasure(format!(
                "alpha0 must be a finite positive real, got {alpha0}"
            )));
        }
        for a in atoms.iter().chain(&density) {
            if !a.alpha.is_finite() || a.alpha.abs() > alpha0 * (1.0 + 1e-12) {
                return Err(SqeError::InvalidMeasure(format!(
                    "coupling {} lies outside [-{alpha0}, {alpha0}]",
                    a.alpha
                )));
            }
            if !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(SqeError::InvalidMeasure(format!(
                    "weight {} at coupling {} is not a finite nonnegative number",
                    a.weight, a.alpha
                )));
            }
        }
        Ok(Self {
            alpha0,
            atoms,
            density,
        })
    }

    /// The zero measure; the dynamics reduce to the free field.
    pub fn zero(alpha0: f64) -> Result<Self> {
        Self::new(alpha0, Vec::new(), Vec::new())
    }

    /// `δ_α`, the exponential model.
    pub fn dirac(alpha: f64) -> Result<Self> {
        Self::new(alpha.abs(), vec![Atom { alpha, weight: 1.0 }], Vec::new())
    }

    /// `(δ_α + δ_{-α}) / 2`, the sinh-Gordon model.
    pub fn sinh(alpha: f64) -> Result<Self> {
        let a = alpha.abs();
        Self::new(
            a,
            vec![
                Atom { alpha: a, weight: 0.5 },
                Atom { alpha: -a, weight: 0.5 },
            ],
            Vec::new(),
        )
    }

    /// Density `ρ` on `[-α0, α0]` integrated by Gauss-Legendre quadrature.
    pub fn from_density(alpha0: f64, rho: impl Fn(f64) -> f64, nodes: usize) -> Result<Self> {
        if nodes == 0 {
            return Err(SqeError::InvalidMeasure("quadrature needs at least one node".into()));
        }
        let (x, w) = gauss_legendre(nodes);
        let density = x
            .iter()
            .zip(&w)
            .map(|(&x, &w)| Atom {
                alpha: alpha0 * x,
                weight: alpha0 * w * rho(alpha0 * x),
            })
            .collect();
        Self::new(alpha0, Vec::new(), density)
    }

    /// Uniform density of total mass `mass` on `[-α0, α0]`.
    pub fn uniform(alpha0: f64, mass: f64, nodes: usize) -> Result<Self> {
        Self::from_density(alpha0, |_| mass / (2.0 * alpha0), nodes)
    }

    /// Same measure declared on a wider interval `[-alpha0, alpha0]`.
    pub fn with_alpha0(mut self, alpha0: f64) -> Result<Self> {
        self.alpha0 = alpha0;
        Self::new(alpha0, self.atoms, self.density)
    }

    /// Adds atoms to the measure.
    pub fn with_atoms(mut self, atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        self.atoms.extend(atoms);
        Self::new(self.alpha0, self.atoms, self.density)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn quadrature(&self) -> &[Atom] {
        &self.density
    }

    /// Every evaluation point: atoms first, then quadrature nodes. Points with
    /// zero weight are skipped.
    pub fn nodes(&self) -> Vec<Atom> {
        self.atoms
            .iter()
            .chain(&self.density)
            .copied()
            .filter(|a| a.weight > 0.0)
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().chain(&self.density).map(|a| a.weight).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.nodes().is_empty()
    }

    /// `α0^2 < 4π`.
    pub fn l2_regime(&self) -> bool {
        self.alpha0 * self.alpha0 < 4.0 * PI
    }

    /// `α0^2 < 8π`.
    pub fn l1_regime(&self) -> bool {
        self.alpha0 * self.alpha0 < 8.0 * PI
    }

    /// `+1` if the support lies in `[0, α0]`, `-1` if in `[-α0, 0]`, `None`
    /// if both signs occur.
    pub fn sign(&self) -> Option<f64> {
        let nodes = self.nodes();
        if nodes.iter().all(|a| a.alpha >= 0.0) {
            Some(1.0)
        } else if nodes.iter().all(|a| a.alpha <= 0.0) {
            Some(-1.0)
        } else {
            None
        }
    }

    pub fn one_signed(&self) -> bool {
        self.sign().is_some()
    }

    /// Largest `|α|` in the support (0 for the zero measure).
    pub fn max_abs_alpha(&self) -> f64 {
        self.nodes().iter().fold(0.0, |m, a| m.max(a.alpha.abs()))
    }

    /// Image under `α -> -α`.
    pub fn reflected(&self) -> Self {
        let flip = |v: &[Atom]| {
            v.iter()
                .map(|a| Atom {
                    alpha: -a.alpha,
                    weight: a.weight,
                })
                .collect()
        };
        Self {
            alpha0: self.alpha0,
            atoms: flip(&self.atoms),
            density: flip(&self.density),
        }
    }

    /// Canonical text form, stable across runs.
    pub fn canonical(&self) -> String {
        let mut s = format!("alpha0={:.17e}", self.alpha0);
        for a in &self.atoms {
            let _ = write!(s, ";atom={:.17e}@{:.17e}", a.alpha, a.weight);
        }
        for a in &self.density {
            let _ = write!(s, ";node={:.17e}@{:.17e}", a.alpha, a.weight);
        }
        s
    }

    /// SHA-256 of [`Self::canonical`].
    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.canonical().as_bytes()).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 16] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            // exact up to degree 2n - 1
            for d in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert_relative_eq!(q, exact, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn presets_and_flags() {
        let s = WeightedMeasure::sinh(1.0).unwrap();
        assert_eq!(s.total_mass(), 1.0);
        assert!(!s.one_signed());
        assert!(s.l2_regime() && s.l1_regime());
        let e = WeightedMeasure::dirac(-2.0).unwrap();
        assert_eq!(e.sign(), Some(-1.0));
        assert!(e.l2_regime());
        let big = WeightedMeasure::dirac(4.0).unwrap();
        assert!(!big.l2_regime() && big.l1_regime());
        let u = WeightedMeasure::uniform(1.5, 2.0, 16).unwrap();
        assert_relative_eq!(u.total_mass(), 2.0, epsilon = 1e-13);
        assert!(u.nodes().iter().all(|a| a.alpha.abs() <= 1.5));
        assert!(WeightedMeasure::zero(1.0).unwrap().is_zero());
    }

    #[test]
    fn validation() {
        assert!(WeightedMeasure::new(1.0, vec![Atom { alpha: 1.5, weight: 1.0 }], vec![]).is_err());
        assert!(WeightedMeasure::new(1.0, vec![Atom { alpha: 0.5, weight: -1.0 }], vec![]).is_err());
        assert!(WeightedMeasure::new(0.0, vec![], vec![]).is_err());
        assert!(WeightedMeasure::dirac(1.0).unwrap().with_alpha0(0.5).is_err());
    }

    #[test]
    fn digest_is_stable_and_discriminating() {
        let a = WeightedMeasure::sinh(1.0).unwrap();
        assert_eq!(a.digest(), WeightedMeasure::sinh(1.0).unwrap().digest());
        assert_ne!(a.digest(), WeightedMeasure::sinh(1.1).unwrap().digest());
        assert_eq!(a.reflected().reflected(), a);
    }
}
