use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_data, median_of, solve_scale, LocationScatter};
use crate::numerics::{Metric, RhoSpec};
use crate::{Error, Result};

/// Column means, with the sample covariance when `n ≥ d + 1` and it is
/// positive definite.
pub fn sample_mean(x: &DMatrix<f64>) -> Result<LocationScatter> {
    check_data(x)?;
    let (n, d) = x.shape();
    let mu = x.row_mean().transpose();
    let sigma = if n > d {
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for row in x.row_iter() {
            let r = row.transpose() - &mu;
            cov.ger(1.0, &r, &r, 1.0);
        }
        cov /= (n - 1) as f64;
        Metric::new(&cov).ok().map(|_| cov)
    } else {
        None
    };
    Ok(LocationScatter { mu, sigma, converged: true, iterations: 0, objective: 0.0 })
}

/// Per-column median; even counts use the midpoint of the central pair.
pub fn coord_median(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_data(x)?;
    Ok(DVector::from_iterator(
        x.ncols(),
        x.column_iter().map(|c| median_of(&mut c.iter().copied().collect::<Vec<_>>())),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateS {
    pub mu: f64,
    pub scale: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Univariate S location/scale: the location minimizing the scale `s` that
/// solves `mean ρ((xᵢ − μ)/s) = b`, found by reweighting from the median.
pub fn univariate_s(values: &[f64], rho: &RhoSpec, b: f64) -> Result<UnivariateS> {
    let n = values.len();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut longest = 1;
    let mut run = 1;
    for w in sorted.windows(2) {
        run = if w[0] == w[1] { run + 1 } else { 1 };
        longest = longest.max(run);
    }
    if 2 * longest >= n && n > 1 || n == 1 {
        return Err(Error::Degenerate(format!("{longest} of {n} values are tied")));
    }

    let mut mu = median_of(&mut sorted);
    let sq = |mu: f64| values.iter().map(|v| (v - mu).powi(2)).collect::<Vec<_>>();
    let mut s = solve_scale(&sq(mu), rho, b)?;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=500 {
        iterations = it;
        let (mut num, mut den) = (0.0, 0.0);
        for &v in values {
            let u = rho.weight((v - mu) / s);
            num += u * v;
            den += u;
        }
        if den <= 0.0 {
            return Err(Error::AllPointsRejected);
        }
        let mu_new = num / den;
        let s_new = solve_scale(&sq(mu_new), rho, b)?;
        let step = (mu_new - mu).abs() / s_new;
        let ds = (s_new - s).abs() / s_new;
        mu = mu_new;
        s = s_new;
        if step < 1e-13 && ds < 1e-13 {
            converged = true;
            break;
        }
    }
    Ok(UnivariateS { mu, scale: s, iterations, converged })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordS {
    pub mu: DVector<f64>,
    pub scale: DVector<f64>,
    pub converged: bool,
}

/// Coordinatewise S-estimator. `rho` should carry the univariate constant for
/// breakdown point `bp`, e.g. from `calibrate_c(1, bp, _)`.
pub fn coord_s(x: &DMatrix<f64>, rho: &RhoSpec, bp: f64) -> Result<CoordS> {
    check_data(x)?;
    let fits = x
        .column_iter()
        .map(|c| univariate_s(&c.iter().copied().collect::<Vec<_>>(), rho, bp))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoordS {
        mu: DVector::from_iterator(fits.len(), fits.iter().map(|f| f.mu)),
        scale: DVector::from_iterator(fits.len(), fits.iter().map(|f| f.scale)),
        converged: fits.iter().all(|f| f.converged),
    })
}
