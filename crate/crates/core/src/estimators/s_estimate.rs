use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_data, coord_median, mcd, median_of, solve_scale, sq_distances, subset_moments, LocationScatter, McdOptions,
    WeightProfile,
};
use crate::numerics::{Metric, RhoSpec};
use crate::rng::{tag, StreamKey};
use crate::{Error, Result};

/// Normal-consistency factor of the median absolute deviation.
const MAD_SCALE: f64 = 1.482_602_218_505_602;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SOptions {
    /// Elemental starts in addition to the MCD start.
    pub n_starts: usize,
    pub mcd_starts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SOptions {
    fn default() -> Self {
        SOptions { n_starts: 20, mcd_starts: 50, max_iter: 200, tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct SEstimate {
    /// `sigma = s²Γ`; `objective = det sigma`.
    pub est: LocationScatter,
    pub w: WeightProfile,
    pub scale: f64,
    /// Shape with unit determinant.
    pub shape: DMatrix<f64>,
    /// `ln det Σ̂` after each reweighting step of the winning start.
    pub log_det_trace: Vec<f64>,
    /// `|mean ρ(dᵢ) − b|` at the returned estimate.
    pub constraint_residual: f64,
    /// Whether the determinant never increased along the winning path.
    pub monotone: bool,
}

struct Path {
    log_det: f64,
    mu: DVector<f64>,
    shape: DMatrix<f64>,
    scale: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    monotone: bool,
}

fn unit_det(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, Metric)> {
    let metric = Metric::new(m).ok()?;
    let d = m.nrows() as f64;
    let shape = m * (-metric.log_det() / d).exp();
    let metric = Metric::new(&shape).ok()?;
    Some((shape, metric))
}

fn iterate(
    cols: &DMatrix<f64>,
    rho: &RhoSpec,
    b: f64,
    opts: &SOptions,
    mu0: DVector<f64>,
    sigma0: &DMatrix<f64>,
) -> Option<Path> {
    let d = cols.nrows();
    let df = d as f64;
    let (mut shape, mut metric) = unit_det(sigma0)?;
    let mut mu = mu0;
    let mut d2 = sq_distances(cols, &mu, &metric);
    let mut scale = solve_scale(&d2, rho, b).ok()?;
    let mut trace = vec![2.0 * df * scale.ln()];
    let mut monotone = true;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let u: Vec<f64> = d2.iter().map(|&v| rho.weight(v.sqrt() / scale)).collect();
        let total: f64 = u.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let mut next_mu = DVector::<f64>::zeros(d);
        for (i, c) in cols.column_iter().enumerate() {
            next_mu.axpy(u[i] / total, &c, 1.0);
        }
        let mut v = DMatrix::<f64>::zeros(d, d);
        for (i, c) in cols.column_iter().enumerate() {
            if u[i] > 0.0 {
                let r = c - &next_mu;
                v.ger(u[i], &r, &r, 1.0);
            }
        }
        let (next_shape, next_metric) = unit_det(&v)?;
        let next_d2 = sq_distances(cols, &next_mu, &next_metric);
        let next_scale = solve_scale(&next_d2, rho, b).ok()?;
        let ld = 2.0 * df * next_scale.ln();
        let last = *trace.last().expect("trace starts non-empty");
        if ld > last + 1e-10 * (1.0 + last.abs()) {
            monotone = false;
        }
        trace.push(ld);
        let step = (&next_mu - &mu).amax().max((&next_shape - &shape).amax()).max((next_scale - scale).abs());
        let size = 1.0 + mu.amax().max(shape.amax()).max(scale);
        mu = next_mu;
        shape = next_shape;
        metric = next_metric;
        d2 = next_d2;
        scale = next_scale;
        if step <= opts.tol * size {
            converged = true;
            break;
        }
    }
    let _ = metric;
    Some(Path { log_det: *trace.last()?, mu, shape, scale, trace, iterations, converged, monotone })
}

/// Robust preliminary fit: MCD, or coordinatewise median with squared MADs
/// when MCD cannot produce a nonsingular subset.
fn initial_fit(x: &DMatrix<f64>, mcd_starts: usize, key: StreamKey) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if let Ok(fit) = mcd(x, McdOptions { h: None, n_starts: mcd_starts }, key) {
        if let Some(s) = fit.est.sigma {
            return Ok((fit.est.mu, s));
        }
    }
    let med = coord_median(x)?;
    let diag = DVector::from_fn(x.ncols(), |j, _| {
        let mut dev: Vec<f64> = x.column(j).iter().map(|v| (v - med[j]).abs()).collect();
        let mad = MAD_SCALE * median_of(&mut dev);
        mad * mad
    });
    if diag.iter().any(|v| *v <= 0.0) {
        return Err(Error::Degenerate("a column has zero median absolute deviation".into()));
    }
    Ok((med, DMatrix::from_diagonal(&diag)))
}

/// S-estimate of location and scatter: the minimum-determinant `Σ̂` subject
/// to `mean ρ(d(xᵢ, μ̂, Σ̂)) = bp`, found by iterative reweighting from an MCD
/// start and `n_starts` elemental starts. The smallest determinant wins; ties
/// go to the earlier start.
pub fn s_estimate(x: &DMatrix<f64>, rho: &RhoSpec, bp: f64, opts: SOptions, key: StreamKey) -> Result<SEstimate> {
    check_data(x)?;
    let (n, d) = x.shape();
    if n < d + 1 {
        return Err(Error::invalid(format!("s_estimate needs at least {} rows, got {n}", d + 1)));
    }
    if !(bp > 0.0 && bp <= 0.5) {
        return Err(Error::invalid(format!("breakdown point must lie in (0, 0.5], got {bp}")));
    }
    let cols = x.transpose();
    let key = key.child(tag("s-estimate"));
    let (mu0, sigma0) = initial_fit(x, opts.mcd_starts, key.child(tag("init")))?;
    let elemental_key = key.child(tag("elemental"));

    let mut paths: Vec<Option<Path>> = vec![iterate(&cols, rho, bp, &opts, mu0, &sigma0)];
    paths.extend(
        (0..opts.n_starts)
            .into_par_iter()
            .map(|s| {
                let mut rng = elemental_key.stream(s as u64);
                let idx = sample_indices(&mut rng, n, d + 1).into_vec();
                let (m, c) = subset_moments(&cols, &idx);
                iterate(&cols, rho, bp, &opts, m, &c)
            })
            .collect::<Vec<_>>(),
    );
    let best = paths
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.log_det < a.log_det { b } else { a })
        .ok_or_else(|| Error::Degenerate("no start produced a nonsingular S-estimate".into()))?;

    let metric = Metric::new(&best.shape)?;
    let d2 = sq_distances(&cols, &best.mu, &metric);
    let s2 = best.scale * best.scale;
    let mean_rho = d2.iter().map(|&v| rho.rho((v / s2).sqrt())).sum::<f64>() / n as f64;
    let u: Vec<f64> = d2.iter().map(|&v| rho.weight((v / s2).sqrt())).collect();
    Ok(SEstimate {
        est: LocationScatter {
            mu: best.mu,
            sigma: Some(&best.shape * s2),
            converged: best.converged,
            iterations: best.iterations,
            objective: best.log_det.exp(),
        },
        w: WeightProfile::normalized(u)?,
        scale: best.scale,
        shape: best.shape,
        log_det_trace: best.trace,
        constraint_residual: (mean_rho - bp).abs(),
        monotone: best.monotone,
    })
}
