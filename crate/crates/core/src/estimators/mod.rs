//! Multivariate location/scatter estimators and their coordinatewise
//! counterparts.
//!
//! Data matrices are `n × d` with one observation per row. Estimators that
//! admit a weighted-mean representation `μ̂ = Σ wᵢ xᵢ` return the weights as a
//! [`WeightProfile`].

mod coordinatewise;
mod m_location;
mod mcd;
mod mve;
mod s_estimate;
mod scale;
mod select;

pub use coordinatewise::{coord_median, coord_s, sample_mean, univariate_s, CoordS, UnivariateS};
pub use m_location::{m_location, m_location_from, MEstimate, M_MAX_ITER};
pub(crate) use m_location::weighted_m_location;
pub use mcd::{default_h, mcd, McdOptions, McdResult};
pub use mve::{mve, mve_coverage, MveOptions, MveResult};
pub use s_estimate::{s_estimate, SEstimate, SOptions};
pub use scale::solve_scale;
pub use select::LocationEstimator;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::numerics::Metric;
use crate::{Error, Result};

/// A location/scatter estimate with convergence diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocationScatter {
    pub mu: DVector<f64>,
    /// Absent only when the data cannot support a positive definite scatter.
    pub sigma: Option<DMatrix<f64>>,
    pub converged: bool,
    pub iterations: usize,
    /// Estimator-specific objective: `det Σ̂` for S, MCD and MVE, mean loss for
    /// M-location, zero otherwise.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub weights: Vec<f64>,
}

impl WeightProfile {
    /// Normalizes nonnegative raw weights to sum to one.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::AllPointsRejected);
        }
        Ok(WeightProfile { weights: raw.into_iter().map(|w| w / total).collect() })
    }

    pub fn uniform(n: usize) -> Self {
        WeightProfile { weights: vec![1.0 / n as f64; n] }
    }

    /// `max |μ − Σ wᵢ xᵢ|`.
    pub fn residual(&self, x: &DMatrix<f64>, mu: &DVector<f64>) -> f64 {
        let mut acc = DVector::<f64>::zeros(x.ncols());
        for (i, w) in self.weights.iter().enumerate() {
            acc += x.row(i).transpose() * *w;
        }
        (acc - mu).amax()
    }

    /// The weights multiplied by `n`, so that uniform weighting is 1.
    pub fn scaled(&self) -> Vec<f64> {
        let n = self.weights.len() as f64;
        self.weights.iter().map(|w| w * n).collect()
    }
}

pub(crate) fn check_data(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::EmptyData);
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "data matrix", value: *v });
    }
    Ok(())
}

/// Mean and covariance (divisor `k − 1`) of the rows of `cols` (stored as
/// columns, `d × n`) selected by `idx`.
pub(crate) fn subset_moments(cols: &DMatrix<f64>, idx: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let d = cols.nrows();
    let k = idx.len();
    let mut mu = DVector::<f64>::zeros(d);
    for &i in idx {
        mu += cols.column(i);
    }
    mu /= k as f64;
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for &i in idx {
        let r = cols.column(i) - &mu;
        cov.ger(1.0, &r, &r, 1.0);
    }
    if k > 1 {
        cov /= (k - 1) as f64;
    }
    (mu, cov)
}

/// Squared Mahalanobis distances of every column of `cols` from `mu`.
pub(crate) fn sq_distances(cols: &DMatrix<f64>, mu: &DVector<f64>, metric: &Metric) -> Vec<f64> {
    let mut centered = cols.clone();
    for mut c in centered.column_iter_mut() {
        c -= mu;
    }
    metric.whiten_columns(&mut centered);
    centered.column_iter().map(|c| c.norm_squared()).collect()
}

/// Indices of the `h` smallest values, ties broken by the smaller index, in
/// ascending index order.
pub(crate) fn smallest_h(values: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx.truncate(h);
    idx.sort_unstable();
    idx
}

/// `h`-th smallest value (1-based), with the same tie rule as [`smallest_h`].
pub(crate) fn kth_smallest(values: &[f64], h: usize) -> f64 {
    let mut v = values.to_vec();
    let (_, kth, _) = v.select_nth_unstable_by(h - 1, f64::total_cmp);
    *kth
}

pub(crate) fn median_of(values: &mut [f64]) -> f64 {
    let n = values.len();
    values.sort_by(f64::total_cmp);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
