use nalgebra::{DMatrix, DVector};

use super::{check_data, coord_median, LocationScatter, WeightProfile};
use crate::numerics::{Metric, RhoSpec};
use crate::{Error, Result};

pub const M_MAX_ITER: usize = 1000;
const STEP_TOL: f64 = 1e-13;
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MEstimate {
    pub est: LocationScatter,
    pub w: WeightProfile,
    /// `‖mean ψ(d²ᵢ)(xᵢ − μ̂)‖` at the returned estimate.
    pub residual: f64,
}

/// M-estimate of location with the scatter held at `sigma`, started from the
/// coordinatewise median.
pub fn m_location(x: &DMatrix<f64>, sigma: &DMatrix<f64>, rho: &RhoSpec) -> Result<MEstimate> {
    check_data(x)?;
    let start = coord_median(x)?;
    m_location_from(x, sigma, rho, &start)
}

pub fn m_location_from(
    x: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    rho: &RhoSpec,
    start: &DVector<f64>,
) -> Result<MEstimate> {
    check_data(x)?;
    let d = x.ncols();
    if sigma.nrows() != d || start.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: sigma.nrows() });
    }
    let metric = Metric::new(sigma)?;
    let cols = x.transpose();
    let obs = vec![1.0; x.nrows()];
    let fit = weighted_m_location(&cols, &obs, &metric, rho, start)?;
    Ok(MEstimate {
        est: LocationScatter {
            mu: fit.mu,
            sigma: Some(sigma.clone()),
            converged: fit.converged,
            iterations: fit.iterations,
            objective: fit.mean_loss,
        },
        w: WeightProfile::normalized(fit.psi)?,
        residual: fit.residual,
    })
}

pub(crate) struct WeightedFit {
    pub mu: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub mean_loss: f64,
    /// `obsᵢ ψ(d²ᵢ)` at the returned location.
    pub psi: Vec<f64>,
}

/// Reweighting iterations `m ← Σ ωᵢψ(d²ᵢ)xᵢ / Σ ωᵢψ(d²ᵢ)` for observations
/// stored as the columns of `cols` with nonnegative observation weights `ω`.
/// Every fixed point solves `Σ ωᵢ ψ(d²ᵢ)(xᵢ − m) = 0`.
pub(crate) fn weighted_m_location(
    cols: &DMatrix<f64>,
    obs: &[f64],
    metric: &Metric,
    rho: &RhoSpec,
    start: &DVector<f64>,
) -> Result<WeightedFit> {
    let mut white = cols.clone();
    metric.whiten_columns(&mut white);
    let mut m = metric.whiten(start);
    let total_obs: f64 = obs.iter().sum();
    if total_obs <= 0.0 {
        return Err(Error::EmptyData);
    }
    let d = cols.nrows();
    let mut converged = false;
    let mut iterations = 0;
    let mut psi = vec![0.0; obs.len()];
    for it in 1..=M_MAX_ITER {
        iterations = it;
        let mut num = DVector::<f64>::zeros(d);
        let mut den = 0.0;
        for (i, z) in white.column_iter().enumerate() {
            if obs[i] == 0.0 {
                continue;
            }
            let r = z - &m;
            let w = obs[i] * rho.psi_sq(r.norm_squared());
            if w > 0.0 {
                num.axpy(w, &z, 1.0);
                den += w;
            }
        }
        if den <= 0.0 {
            return Err(Error::AllPointsRejected);
        }
        let m_new = num / den;
        let step = (&m_new - &m).norm();
        m = m_new;
        if step < STEP_TOL * (1.0 + m.norm()) {
            converged = true;
            break;
        }
    }

    let mut resid = DVector::<f64>::zeros(d);
    let mut loss = 0.0;
    for (i, z) in white.column_iter().enumerate() {
        let r = z - &m;
        let s = r.norm_squared();
        psi[i] = obs[i] * rho.psi_sq(s);
        resid.axpy(psi[i], &r, 1.0);
        loss += obs[i] * rho.eval_sq(s).rho;
    }
    let lower = metric.lower();
    let residual = (&lower * resid).norm() / total_obs;
    converged &= residual < RESIDUAL_TOL;
    Ok(WeightedFit { mu: &lower * m, iterations, converged, residual, mean_loss: loss / total_obs, psi })
}
