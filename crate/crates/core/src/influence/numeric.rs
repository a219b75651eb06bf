use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Functional, InfluenceContext, InfluenceResult, ModelKind};
use crate::contamination::{sample_clean, ContaminationModel, IndicatorLaw};
use crate::estimators::weighted_m_location;
use crate::numerics::Metric;
use crate::rng::{tag, StreamKey};
use crate::{Error, Result};

/// Largest dimension for which every cell subset of `H(ε, z)` is enumerated.
const MAX_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericOptions {
    /// Contamination fractions at which the difference quotient is taken.
    pub eps: Vec<f64>,
    /// Core draws representing `H₀`.
    pub n_draws: usize,
    /// Bootstrap replicates for the standard error.
    pub n_boot: usize,
    pub seed: u64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions { eps: vec![0.001, 0.002], n_draws: 50_000, n_boot: 10, seed: 0 }
    }
}

fn contamination_model(kind: ModelKind) -> ContaminationModel {
    match kind {
        ModelKind::Fdcm => ContaminationModel::Fdcm,
        ModelKind::Ficm | ModelKind::Pcicm => ContaminationModel::Ficm,
        ModelKind::Psicm => ContaminationModel::Psicm,
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Intercept of the least-squares line through `(x, y)`, or `y` itself for a
/// single point.
fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    if x.len() == 1 {
        return y[0];
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    my - sxy / sxx * mx
}

struct Problem<'a> {
    ctx: &'a InfluenceContext,
    z: &'a DVector<f64>,
    eps: &'a [f64],
    laws: Vec<IndicatorLaw>,
}

impl Problem<'_> {
    fn fit(&self, cols: &DMatrix<f64>, obs: &[f64], metric: &Metric, start: &DVector<f64>) -> Result<DVector<f64>> {
        let fit = weighted_m_location(cols, obs, metric, self.ctx.rho(), start)?;
        if !fit.converged {
            return Err(Error::NotConverged { context: "finite-contamination location fit", iterations: fit.iterations });
        }
        Ok(fit.mu)
    }

    /// Extrapolated slope for one realization of the core sample.
    fn slope(&self, y: &DMatrix<f64>) -> Result<DVector<f64>> {
        match self.ctx.functional() {
            Functional::Multivariate => self.slope_multivariate(y),
            Functional::Coordinatewise => self.slope_coordinatewise(y),
        }
    }

    fn slope_multivariate(&self, y: &DMatrix<f64>) -> Result<DVector<f64>> {
        let d = self.ctx.dim();
        let n = y.nrows();
        let metric = self.ctx.model().metric();
        let base = y.transpose();
        let mu0 = self.fit(&base, &vec![1.0; n], &metric, self.ctx.model().mu0())?;

        // blocks: the core sample, each proper nonempty subset of cells
        // replaced by z, then z itself
        let masks: Vec<u32> = (0..(1u32 << d) - 1).collect();
        let mut cols = DMatrix::zeros(d, masks.len() * n + 1);
        for (b, &mask) in masks.iter().enumerate() {
            for i in 0..n {
                for k in 0..d {
                    cols[(k, b * n + i)] = if mask >> k & 1 == 1 { self.z[k] } else { base[(k, i)] };
                }
            }
        }
        cols.set_column(masks.len() * n, self.z);

        let mut slopes = Vec::with_capacity(self.eps.len());
        for (law, &eps) in self.laws.iter().zip(self.eps) {
            let mut obs = Vec::with_capacity(cols.ncols());
            for &mask in &masks {
                let k = mask.count_ones() as usize;
                let p = law.delta_k(d, k)? / binomial(d, k) / n as f64;
                obs.extend(std::iter::repeat_n(p, n));
            }
            obs.push(law.delta_k(d, d)?);
            let mu = self.fit(&cols, &obs, &metric, &mu0)?;
            slopes.push((mu - &mu0) / eps);
        }
        Ok(DVector::from_fn(d, |j, _| {
            extrapolate_to_zero(self.eps, &slopes.iter().map(|s| s[j]).collect::<Vec<_>>())
        }))
    }

    /// Each coordinate sees the mixture `(1 − π)H₀ⱼ + π Δ_{zⱼ}` with `π` the
    /// marginal cell contamination probability.
    fn slope_coordinatewise(&self, y: &DMatrix<f64>) -> Result<DVector<f64>> {
        let d = self.ctx.dim();
        let n = y.nrows();
        let sigma = self.ctx.model().sigma0();
        let mut out = DVector::zeros(d);
        for j in 0..d {
            let metric = Metric::new(&DMatrix::from_element(1, 1, sigma[(j, j)]))?;
            let mut cols = DMatrix::zeros(1, n + 1);
            for i in 0..n {
                cols[(0, i)] = y[(i, j)];
            }
            cols[(0, n)] = self.z[j];
            let start = DVector::from_element(1, self.ctx.model().mu0()[j]);
            let mut obs = vec![1.0; n];
            obs.push(0.0);
            let m0 = self.fit(&cols, &obs, &metric, &start)?;
            let mut slopes = Vec::with_capacity(self.eps.len());
            for (law, &eps) in self.laws.iter().zip(self.eps) {
                let pi: f64 =
                    (1..=d).map(|k| law.delta_k(d, k).map(|p| p * k as f64 / d as f64)).sum::<Result<f64>>()?;
                let mut obs = vec![(1.0 - pi) / n as f64; n];
                obs.push(pi);
                let m = self.fit(&cols, &obs, &metric, &m0)?;
                slopes.push((m[0] - m0[0]) / eps);
            }
            out[j] = extrapolate_to_zero(self.eps, &slopes);
        }
        Ok(out)
    }
}

/// Finite-contamination estimate of the influence function: the location
/// functional is solved on a weighted realization of `H(ε, z)` at each `ε`
/// (with the scatter held at `Σ₀`), the difference quotients against `ε = 0`
/// are extrapolated linearly to `ε = 0`, and the standard error comes from
/// resampling the core draws.
pub fn if_numeric(z: &DVector<f64>, ctx: &InfluenceContext, opts: &NumericOptions) -> Result<InfluenceResult> {
    ctx.check_z(z)?;
    let d = ctx.dim();
    if d > MAX_DIM && ctx.functional() == Functional::Multivariate {
        return Err(Error::invalid(format!("the finite-contamination oracle supports d ≤ {MAX_DIM}, got {d}")));
    }
    if opts.eps.is_empty() || opts.eps.iter().any(|e| !(*e > 0.0 && *e <= 0.01)) {
        return Err(Error::invalid("contamination grid must be nonempty with values in (0, 0.01]"));
    }
    if opts.n_boot < 2 || opts.n_draws < 10 {
        return Err(Error::invalid("need at least 2 bootstrap replicates and 10 draws"));
    }
    let model = contamination_model(ctx.kind());
    let laws = opts.eps.iter().map(|&e| IndicatorLaw::new(model, e)).collect::<Result<Vec<_>>>()?;
    let problem = Problem { ctx, z, eps: &opts.eps, laws };

    let key = StreamKey::new(opts.seed).child(tag("if-numeric"));
    let y = sample_clean(ctx.model(), opts.n_draws, key.child(tag("core")));
    let value = problem.slope(&y)?;

    let boot_key = key.child(tag("bootstrap"));
    let reps: Vec<DVector<f64>> = (0..opts.n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = boot_key.stream(b as u64);
            let idx: Vec<usize> = (0..opts.n_draws).map(|_| rng.random_range(0..opts.n_draws)).collect();
            let yb = DMatrix::from_fn(opts.n_draws, d, |i, j| y[(idx[i], j)]);
            problem.slope(&yb)
        })
        .collect::<Result<_>>()?;
    let nb = opts.n_boot as f64;
    let mean = reps.iter().fold(DVector::zeros(d), |a, r| a + r) / nb;
    let stderr = reps.iter().fold(DVector::zeros(d), |a, r| a + (r - &mean).map(|x| x * x)).map(|v| (v / (nb - 1.0)).sqrt());
    Ok(InfluenceResult { z: z.clone(), value, stderr })
}
