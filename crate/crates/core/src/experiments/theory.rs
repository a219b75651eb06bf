use nalgebra::DMatrix;

use crate::{Error, Result};

/// Upper bound `1 − (1/2 − δ)^{1/d}` on the cellwise breakdown point of an
/// affine equivariant, δ-consistent location estimator.
pub fn epsilon0(delta: f64, d: usize) -> Result<f64> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1/2), got {delta}")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    Ok(1.0 - (0.5 - delta).powf(1.0 / d as f64))
}

/// Dimensions tabulated for the breakdown bound.
pub const TABLE1_DIMS: [usize; 9] = [1, 2, 3, 4, 5, 10, 15, 20, 100];

/// `(d, ε₀(0, d))` for the tabulated dimensions.
pub fn table1() -> Vec<(usize, f64)> {
    TABLE1_DIMS.iter().map(|&d| (d, epsilon0(0.0, d).expect("valid"))).collect()
}

/// Smallest `d` with `(1 − ε)^d < 1/2`.
pub fn min_dim_majority_contaminated(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let mut d = 1usize;
    while (1.0 - eps).powi(d as i32) >= 0.5 {
        d += 1;
    }
    Ok(d)
}

/// The all-ones-plus-identity matrix (2 on the diagonal, 1 elsewhere), which
/// mixes every coordinate into every other.
pub fn theorem1_transform(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| if i == j { 2.0 } else { 1.0 })
}
