use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    coord_median, coord_s, mcd, mve, s_estimate, sample_mean, LocationScatter, McdOptions, MveOptions, SOptions,
};
use crate::numerics::{calibrate_c, ArgConvention, RhoSpec};
use crate::rng::StreamKey;
use crate::Result;

/// A location estimator chosen by name, as used by experiments and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LocationEstimator {
    Mean,
    CoordMedian,
    CoordS { bp: f64 },
    Mcd { n_starts: usize },
    Mve { n_trials: usize },
    S { bp: f64, n_starts: usize },
}

impl LocationEstimator {
    pub fn name(&self) -> &'static str {
        match self {
            LocationEstimator::Mean => "mean",
            LocationEstimator::CoordMedian => "coord_median",
            LocationEstimator::CoordS { .. } => "coord_s",
            LocationEstimator::Mcd { .. } => "mcd",
            LocationEstimator::Mve { .. } => "mve",
            LocationEstimator::S { .. } => "s",
        }
    }

    /// Parses a name with default tuning: `mean`, `coord_median`, `coord_s`,
    /// `mcd`, `mve` or `s`.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "mean" => LocationEstimator::Mean,
            "coord_median" | "median" => LocationEstimator::CoordMedian,
            "coord_s" => LocationEstimator::CoordS { bp: 0.5 },
            "mcd" => LocationEstimator::Mcd { n_starts: McdOptions::default().n_starts },
            "mve" => LocationEstimator::Mve { n_trials: MveOptions::default().n_trials },
            "s" => LocationEstimator::S { bp: 0.5, n_starts: SOptions::default().n_starts },
            _ => return None,
        })
    }

    pub fn is_affine_equivariant(&self) -> bool {
        !matches!(self, LocationEstimator::CoordMedian | LocationEstimator::CoordS { .. })
    }

    /// Location estimate of the rows of `x`.
    pub fn locate(&self, x: &DMatrix<f64>, key: StreamKey) -> Result<DVector<f64>> {
        match self {
            LocationEstimator::Mean => Ok(sample_mean(x)?.mu),
            LocationEstimator::CoordMedian => coord_median(x),
            _ => Ok(self.fit(x, key)?.mu),
        }
    }

    /// Full location/scatter fit. The coordinatewise S scatter is the
    /// diagonal of squared scales; the coordinatewise median has none.
    pub fn fit(&self, x: &DMatrix<f64>, key: StreamKey) -> Result<LocationScatter> {
        Ok(match *self {
            LocationEstimator::Mean => sample_mean(x)?,
            LocationEstimator::CoordMedian => {
                LocationScatter { mu: coord_median(x)?, sigma: None, converged: true, iterations: 0, objective: 0.0 }
            }
            LocationEstimator::CoordS { bp } => {
                let c = calibrate_c(1, bp, ArgConvention::ScaledDistance)?;
                let fit = coord_s(x, &RhoSpec::tukey(c, ArgConvention::ScaledDistance)?, bp)?;
                let scatter = DMatrix::from_diagonal(&fit.scale.map(|s| s * s));
                LocationScatter { mu: fit.mu, sigma: Some(scatter), converged: fit.converged, iterations: 0, objective: 0.0 }
            }
            LocationEstimator::Mcd { n_starts } => mcd(x, McdOptions { h: None, n_starts }, key)?.est,
            LocationEstimator::Mve { n_trials } => mve(x, MveOptions { n_trials }, key)?.est,
            LocationEstimator::S { bp, n_starts } => {
                let c = calibrate_c(x.ncols(), bp, ArgConvention::SquaredDistance)?;
                let opts = SOptions { n_starts, ..SOptions::default() };
                s_estimate(x, &RhoSpec::tukey(c, ArgConvention::SquaredDistance)?, bp, opts, key)?.est
            }
        })
    }
}
