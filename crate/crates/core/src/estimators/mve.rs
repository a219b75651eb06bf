use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_data, kth_smallest, sq_distances, subset_moments, LocationScatter, WeightProfile};
use crate::numerics::Metric;
use crate::rng::{tag, StreamKey};
use crate::{Error, Result};

/// Number of points the ellipsoid must cover, `⌈(n + d + 1)/2⌉`.
pub fn mve_coverage(n: usize, d: usize) -> usize {
    (n + d + 2) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MveOptions {
    pub n_trials: usize,
}

impl Default for MveOptions {
    fn default() -> Self {
        MveOptions { n_trials: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct MveResult {
    /// Center and inflated shape `r²S`; `objective` is its determinant.
    pub est: LocationScatter,
    /// Rows whose mean is the center.
    pub support: Vec<usize>,
    pub w: WeightProfile,
    /// `det(S)^{1/2} r^d` of the winning ellipsoid.
    pub volume: f64,
    /// The same quantity for the full-sample covariance ellipsoid.
    pub sample_volume: f64,
    pub degenerate_trials: usize,
}

struct Candidate {
    log_volume: f64,
    mu: DVector<f64>,
    shape: DMatrix<f64>,
    r2: f64,
    support: Vec<usize>,
}

fn inflate(cols: &DMatrix<f64>, idx: Vec<usize>, h: usize) -> Option<Candidate> {
    let (mu, shape) = subset_moments(cols, &idx);
    let metric = Metric::new(&shape).ok()?;
    let d2 = sq_distances(cols, &mu, &metric);
    let r2 = kth_smallest(&d2, h);
    if !(r2 > 0.0 && r2.is_finite()) {
        return None;
    }
    let d = cols.nrows() as f64;
    Some(Candidate {
        log_volume: 0.5 * metric.log_det() + 0.5 * d * r2.ln(),
        mu,
        shape,
        r2,
        support: idx,
    })
}

/// Minimum volume ellipsoid by elemental resampling. Each trial's
/// `(d + 1)`-subset ellipsoid is inflated until it covers
/// [`mve_coverage`] points; the sample-covariance ellipsoid is always
/// included as a candidate. Ties go to the earlier trial.
pub fn mve(x: &DMatrix<f64>, opts: MveOptions, key: StreamKey) -> Result<MveResult> {
    check_data(x)?;
    let (n, d) = x.shape();
    if n < d + 1 {
        return Err(Error::invalid(format!("mve needs at least {} rows, got {n}", d + 1)));
    }
    let h = mve_coverage(n, d).min(n);
    let cols = x.transpose();
    let key = key.child(tag("mve"));

    let all: Vec<usize> = (0..n).collect();
    let baseline = inflate(&cols, all, h);
    let sample_volume = baseline.as_ref().map_or(f64::INFINITY, |c| c.log_volume.exp());

    let trials: Vec<Option<Candidate>> = (0..opts.n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = key.stream(t as u64);
            let idx = sample_indices(&mut rng, n, d + 1).into_vec();
            inflate(&cols, idx, h)
        })
        .collect();
    let degenerate_trials = trials.iter().filter(|c| c.is_none()).count();

    let best = std::iter::once(baseline)
        .chain(trials)
        .flatten()
        .reduce(|a, b| if b.log_volume < a.log_volume { b } else { a })
        .ok_or(Error::SingularScatter)?;

    let mut raw = vec![0.0; n];
    for &i in &best.support {
        raw[i] = 1.0;
    }
    let sigma = best.shape * best.r2;
    let mut support = best.support;
    support.sort_unstable();
    Ok(MveResult {
        est: LocationScatter {
            mu: best.mu,
            objective: (2.0 * best.log_volume).exp(),
            sigma: Some(sigma),
            converged: true,
            iterations: opts.n_trials,
        },
        support,
        w: WeightProfile::normalized(raw)?,
        volume: best.log_volume.exp(),
        sample_volume,
        degenerate_trials,
    })
}
