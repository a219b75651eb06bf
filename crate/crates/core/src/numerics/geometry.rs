use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{Error, Result};

/// Smallest admissible fraction of a coordinate's variance left unexplained by
/// the preceding coordinates.
const COLLINEARITY_TOL: f64 = 1e-12;

/// Squared Mahalanobis distance `(x − m)' Σ⁻¹ (x − m)`.
pub fn mahalanobis_sq(x: &DVector<f64>, m: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    Metric::new(sigma)?.dist_sq(x, m)
}

/// A factorized scatter matrix for repeated distance evaluations.
#[derive(Debug, Clone)]
pub struct Metric {
    chol: Cholesky<f64, Dyn>,
}

impl Metric {
    pub fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::DimensionMismatch { expected: sigma.nrows(), found: sigma.ncols() });
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularScatter);
        }
        let sym = (sigma + sigma.transpose()) * 0.5;
        let diag = sym.diagonal();
        let chol = Cholesky::new(sym).ok_or(Error::SingularScatter)?;
        // L_jj² / Σ_jj is 1 − R² of coordinate j on the earlier ones
        let collinear = chol
            .l_dirty()
            .diagonal()
            .iter()
            .zip(diag.iter())
            .any(|(&l, &s)| !(l > 0.0 && l.is_finite()) || l * l < COLLINEARITY_TOL * s);
        if collinear {
            return Err(Error::SingularScatter);
        }
        Ok(Metric { chol })
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn dist_sq(&self, x: &DVector<f64>, m: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() || m.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(self.whiten(&(x - m)).norm_squared())
    }

    /// `L⁻¹ v` for the lower Cholesky factor `L`.
    pub fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.l_dirty().solve_lower_triangular(v).expect("factor has positive diagonal")
    }

    /// Whitens every column of a `d × n` matrix in place.
    pub fn whiten_columns(&self, cols: &mut DMatrix<f64>) {
        self.chol.l_dirty().solve_lower_triangular_mut(cols);
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}
