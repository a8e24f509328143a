//! Smooth cylindrical functionals `F(φ) = f(⟨φ, l_1⟩, …, ⟨φ, l_m⟩)`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{invalid, Result, SqeError};
use crate::spectral::{Grid, Spectrum};

/// Outer function `f: ℝ^m → ℝ` with first and second derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outer {
    Constant(f64),
    /// `y`
    Linear,
    /// `y^2`
    Square,
    Sin,
    Cos,
    /// `cos(y_1 + … + y_m)`
    CosSum,
    /// `exp(-|y|^2 / 2)`
    GaussianBump,
}

impl Outer {
    fn arity_ok(&self, m: usize) -> bool {
        match self {
            Self::Linear | Self::Square | Self::Sin | Self::Cos => m == 1,
            _ => m >= 1,
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Linear => y[0],
            Self::Square => y[0] * y[0],
            Self::Sin => y[0].sin(),
            Self::Cos => y[0].cos(),
            Self::CosSum => y.iter().sum::<f64>().cos(),
            Self::GaussianBump => (-0.5 * y.iter().map(|v| v * v).sum::<f64>()).exp(),
        }
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Self::Constant(_) => vec![0.0; y.len()],
            Self::Linear => vec![1.0],
            Self::Square => vec![2.0 * y[0]],
            Self::Sin => vec![y[0].cos()],
            Self::Cos => vec![-y[0].sin()],
            Self::CosSum => vec![-y.iter().sum::<f64>().sin(); y.len()],
            Self::GaussianBump => {
                let f = self.value(y);
                y.iter().map(|v| -v * f).collect()
            }
        }
    }

    pub fn hessian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let m = y.len();
        match self {
            Self::Constant(_) | Self::Linear => vec![vec![0.0; m]; m],
            Self::Square => vec![vec![2.0]],
            Self::Sin => vec![vec![-y[0].sin()]],
            Self::Cos => vec![vec![-y[0].cos()]],
            Self::CosSum => vec![vec![-y.iter().sum::<f64>().cos(); m]; m],
            Self::GaussianBump => {
                let f = self.value(y);
                (0..m)
                    .map(|i| {
                        (0..m)
                            .map(|j| (y[i] * y[j] - if i == j { 1.0 } else { 0.0 }) * f)
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

/// `F(φ) = f(⟨φ, l_1⟩, …, ⟨φ, l_m⟩)` with band-limited directions `l_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylindricalFunctional {
    outer: Outer,
    directions: Vec<Spectrum>,
}

impl CylindricalFunctional {
    pub fn new(outer: Outer, directions: Vec<Spectrum>) -> Result<Self> {
        let m = directions.len();
        if m == 0 {
            return Err(invalid("directions", "at least one direction is required"));
        }
        if !outer.arity_ok(m) {
            return Err(invalid("directions", format!("{outer:?} does not take {m} arguments")));
        }
        let grid = directions[0].grid();
        if directions.iter().any(|d| d.grid() != grid) {
            return Err(invalid("directions", "directions live on different grids"));
        }
        if directions.iter().any(|d| d.hermitian_defect() > 1e-12) {
            return Err(invalid("directions", "directions must be real fields"));
        }
        let f = Self { outer, directions };
        if !f.independent() {
            return Err(invalid("directions", "directions are linearly dependent"));
        }
        Ok(f)
    }

    pub fn outer(&self) -> Outer {
        self.outer
    }

    pub fn directions(&self) -> &[Spectrum] {
        &self.directions
    }

    pub fn grid(&self) -> Grid {
        self.directions[0].grid()
    }

    /// The same functional with directions moved onto `grid`.
    pub fn on_grid(&self, grid: Grid) -> Result<Self> {
        Ok(Self {
            outer: self.outer,
            directions: self
                .directions
                .iter()
                .map(|d| d.resample(grid))
                .collect::<Result<_>>()?,
        })
    }

    /// Gram matrix `⟨l_i, l_j⟩`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.directions
            .iter()
            .map(|a| self.directions.iter().map(|b| a.inner(b)).collect())
            .collect()
    }

    /// Cholesky of the Gram matrix succeeds with a pivot floor relative to the
    /// diagonal.
    fn independent(&self) -> bool {
        let g = self.gram();
        let m = g.len();
        let mut l = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let s = g[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if i == j {
                    if !(s > 1e-10 * g[i][i]) {
                        return false;
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        true
    }

    fn check_grid(&self, phi: &Spectrum) -> Result<()> {
        if phi.grid() != self.grid() {
            return Err(SqeError::DimensionMismatch {
                expected: self.grid().len(),
                actual: phi.grid().len(),
            });
        }
        Ok(())
    }

    /// `(⟨φ, l_i⟩)_i`.
    pub fn coordinates(&self, phi: &Spectrum) -> Result<Vec<f64>> {
        self.check_grid(phi)?;
        Ok(self.directions.iter().map(|l| phi.inner(l)).collect())
    }

    pub fn value(&self, phi: &Spectrum) -> Result<f64> {
        Ok(self.outer.value(&self.coordinates(phi)?))
    }

    /// `∇F(φ) = Σ ∂_i f l_i`.
    pub fn gradient(&self, phi: &Spectrum) -> Result<Spectrum> {
        let g = self.outer.gradient(&self.coordinates(phi)?);
        let mut out = Spectrum::zeros(self.grid());
        for (gi, l) in g.iter().zip(&self.directions) {
            out = out.add(&l.scale(*gi))?;
        }
        Ok(out)
    }

    /// `Tr ∇²F(φ) = Σ_ij ∂_ij f ⟨l_i, l_j⟩`.
    pub fn hessian_trace(&self, phi: &Spectrum) -> Result<f64> {
        let h = self.outer.hessian(&self.coordinates(phi)?);
        let g = self.gram();
        Ok(h.iter()
            .zip(&g)
            .map(|(hr, gr)| hr.iter().zip(gr).map(|(a, b)| a * b).sum::<f64>())
            .sum())
    }
}

/// Unit-norm real directions on the lowest modes: `e_0`, the cosine and sine
/// pairs on `(1, 0)` and the cosine pair on `(0, 1)`.
pub fn standard_directions(grid: Grid) -> Result<[Spectrum; 4]> {
    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let i = Complex64::new(0.0, FRAC_1_SQRT_2);
    Ok([
        Spectrum::from_modes(grid, &[((0, 0), Complex64::new(1.0, 0.0))])?,
        Spectrum::from_modes(grid, &[((1, 0), r), ((-1, 0), r)])?,
        Spectrum::from_modes(grid, &[((1, 0), -i), ((-1, 0), i)])?,
        Spectrum::from_modes(grid, &[((0, 1), r), ((0, -1), r)])?,
    ])
}

/// Five low-mode observables: `⟨φ,e_0⟩^2`, `cos⟨φ, e_{1,0} + e_{-1,0}⟩`,
/// `sin⟨φ,e_0⟩`, the square of the `(0, 1)` cosine coordinate and a Gaussian
/// bump in two coordinates.
pub fn standard_observables(grid: Grid) -> Result<Vec<(String, CylindricalFunctional)>> {
    let [e0, c10, s10, c01] = standard_directions(grid)?;
    let pair = Spectrum::from_modes(
        grid,
        &[((1, 0), Complex64::new(1.0, 0.0)), ((-1, 0), Complex64::new(1.0, 0.0))],
    )?;
    Ok(vec![
        ("zero_mode_sq".into(), CylindricalFunctional::new(Outer::Square, vec![e0.clone()])?),
        ("cos_pair".into(), CylindricalFunctional::new(Outer::Cos, vec![pair])?),
        ("sin_zero_mode".into(), CylindricalFunctional::new(Outer::Sin, vec![e0])?),
        ("mode01_sq".into(), CylindricalFunctional::new(Outer::Square, vec![c01])?),
        (
            "bump".into(),
            CylindricalFunctional::new(Outer::GaussianBump, vec![c10, s10])?,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn finite_diff_check(outer: Outer, y: &[f64]) {
        let h = 1e-5;
        let g = outer.gradient(y);
        let hs = outer.hessian(y);
        for i in 0..y.len() {
            let mut yp = y.to_vec();
            let mut ym = y.to_vec();
            yp[i] += h;
            ym[i] -= h;
            let fd = (outer.value(&yp) - outer.value(&ym)) / (2.0 * h);
            assert_relative_eq!(g[i], fd, epsilon = 1e-8);
            let gp = outer.gradient(&yp);
            let gm = outer.gradient(&ym);
            for j in 0..y.len() {
                assert_relative_eq!(hs[j][i], (gp[j] - gm[j]) / (2.0 * h), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn outer_derivatives_match_finite_differences() {
        finite_diff_check(Outer::Constant(2.0), &[0.3, 0.1]);
        finite_diff_check(Outer::Linear, &[0.3]);
        finite_diff_check(Outer::Square, &[0.3]);
        finite_diff_check(Outer::Sin, &[0.7]);
        finite_diff_check(Outer::Cos, &[0.7]);
        finite_diff_check(Outer::CosSum, &[0.7, -0.2, 0.4]);
        finite_diff_check(Outer::GaussianBump, &[0.7, -0.2]);
    }

    #[test]
    fn standard_directions_are_orthonormal() {
        let grid = Grid::new(8).unwrap();
        let d = standard_directions(grid).unwrap();
        for (i, a) in d.iter().enumerate() {
            for (j, b) in d.iter().enumerate() {
                assert_relative_eq!(a.inner(b), if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
        assert_eq!(standard_observables(grid).unwrap().len(), 5);
    }

    #[test]
    fn rejects_dependent_or_misshapen_directions() {
        let grid = Grid::new(8).unwrap();
        let [e0, c10, ..] = standard_directions(grid).unwrap();
        assert!(CylindricalFunctional::new(Outer::CosSum, vec![e0.clone(), e0.scale(2.0)]).is_err());
        assert!(CylindricalFunctional::new(Outer::Square, vec![e0.clone(), c10.clone()]).is_err());
        assert!(CylindricalFunctional::new(Outer::Cos, vec![]).is_err());
        assert!(CylindricalFunctional::new(Outer::CosSum, vec![e0, c10]).is_ok());
    }

    #[test]
    fn linear_functional_reads_coordinates() {
        let grid = Grid::new(8).unwrap();
        let [e0, c10, ..] = standard_directions(grid).unwrap();
        let phi = e0.scale(0.5).add(&c10.scale(-2.0)).unwrap();
        let f = CylindricalFunctional::new(Outer::Linear, vec![c10.clone()]).unwrap();
        assert_relative_eq!(f.value(&phi).unwrap(), -2.0, epsilon = 1e-15);
        assert_eq!(f.gradient(&phi).unwrap(), c10);
        assert_eq!(f.hessian_trace(&phi).unwrap(), 0.0);
    }
}
