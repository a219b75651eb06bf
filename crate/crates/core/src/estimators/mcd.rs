use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_data, smallest_h, sq_distances, subset_moments, LocationScatter, WeightProfile};
use crate::numerics::Metric;
use crate::rng::{tag, StreamKey};
use crate::{Error, Result};

const MAX_CSTEPS: usize = 200;
const ELEMENTAL_RETRIES: usize = 10;

/// `⌊(n + d + 1)/2⌋`.
pub fn default_h(n: usize, d: usize) -> usize {
    (n + d + 1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McdOptions {
    /// Subset size; `None` means [`default_h`].
    pub h: Option<usize>,
    pub n_starts: usize,
}

impl Default for McdOptions {
    fn default() -> Self {
        McdOptions { h: None, n_starts: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct McdResult {
    pub est: LocationScatter,
    /// Selected rows, ascending.
    pub subset: Vec<usize>,
    pub w: WeightProfile,
    /// Log-determinants after each concentration step of the winning start.
    pub log_det_trace: Vec<f64>,
    /// Whether every start produced a nonincreasing determinant sequence.
    pub monotone: bool,
    pub failed_starts: usize,
}

struct StartFit {
    log_det: f64,
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    subset: Vec<usize>,
    trace: Vec<f64>,
    monotone: bool,
    converged: bool,
}

fn elemental<R: rand::Rng>(cols: &DMatrix<f64>, rng: &mut R) -> Option<(DVector<f64>, Metric)> {
    let (d, n) = cols.shape();
    for _ in 0..ELEMENTAL_RETRIES {
        let idx = sample_indices(rng, n, d + 1).into_vec();
        let (mu, cov) = subset_moments(cols, &idx);
        if let Ok(m) = Metric::new(&cov) {
            return Some((mu, m));
        }
    }
    None
}

fn concentrate(cols: &DMatrix<f64>, h: usize, mut mu: DVector<f64>, mut metric: Metric) -> Option<StartFit> {
    let mut prev: Option<Vec<usize>> = None;
    let mut trace: Vec<f64> = Vec::new();
    let mut monotone = true;
    let mut sigma = DMatrix::zeros(0, 0);
    for _ in 0..MAX_CSTEPS {
        let d2 = sq_distances(cols, &mu, &metric);
        let subset = smallest_h(&d2, h);
        if prev.as_ref() == Some(&subset) {
            return Some(StartFit {
                log_det: *trace.last().expect("at least one step"),
                mu,
                sigma,
                subset,
                trace,
                monotone,
                converged: true,
            });
        }
        let (m, cov) = subset_moments(cols, &subset);
        let next = Metric::new(&cov).ok()?;
        let ld = next.log_det();
        if let Some(&last) = trace.last() {
            if ld > last + 1e-10 * (1.0 + last.abs()) {
                monotone = false;
            }
        }
        trace.push(ld);
        mu = m;
        sigma = cov;
        metric = next;
        prev = Some(subset);
    }
    Some(StartFit {
        log_det: *trace.last()?,
        mu,
        sigma,
        subset: prev?,
        trace,
        monotone,
        converged: false,
    })
}

/// Minimum covariance determinant by concentration steps from elemental
/// starts. Each start is iterated until its `h`-subset stops changing; the
/// start with the smallest determinant wins, ties going to the lower start
/// index.
pub fn mcd(x: &DMatrix<f64>, opts: McdOptions, key: StreamKey) -> Result<McdResult> {
    check_data(x)?;
    let (n, d) = x.shape();
    let h = opts.h.unwrap_or_else(|| default_h(n, d));
    if h < d + 1 || h > n {
        return Err(Error::invalid(format!("subset size {h} must lie in [{}, {n}]", d + 1)));
    }
    let cols = x.transpose();
    let key = key.child(tag("mcd"));

    let fits: Vec<Option<StartFit>> = if h == n {
        let all: Vec<usize> = (0..n).collect();
        let (mu, cov) = subset_moments(&cols, &all);
        let metric = Metric::new(&cov)?;
        vec![Some(StartFit {
            log_det: metric.log_det(),
            mu,
            sigma: cov,
            subset: all,
            trace: vec![metric.log_det()],
            monotone: true,
            converged: true,
        })]
    } else {
        (0..opts.n_starts.max(1))
            .into_par_iter()
            .map(|s| {
                let mut rng = key.stream(s as u64);
                let (mu, metric) = elemental(&cols, &mut rng)?;
                concentrate(&cols, h, mu, metric)
            })
            .collect()
    };

    let failed_starts = fits.iter().filter(|f| f.is_none()).count();
    let monotone = fits.iter().flatten().all(|f| f.monotone);
    let best = fits
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.log_det < a.log_det { b } else { a })
        .ok_or(Error::SingularScatter)?;

    let mut raw = vec![0.0; n];
    for &i in &best.subset {
        raw[i] = 1.0;
    }
    Ok(McdResult {
        est: LocationScatter {
            mu: best.mu,
            sigma: Some(best.sigma),
            converged: best.converged,
            iterations: best.trace.len(),
            objective: best.log_det.exp(),
        },
        subset: best.subset,
        w: WeightProfile::normalized(raw)?,
        log_det_trace: best.trace,
        monotone,
        failed_starts,
    })
}
