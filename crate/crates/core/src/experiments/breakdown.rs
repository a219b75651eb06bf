use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::bias::mean_se;
use super::report::{line_chart, Assertion, ExperimentReport, Series};
use super::theory::epsilon0;
use crate::contamination::{contaminate, sample_clean, ContaminationModel, ContaminationSpec, OutlierGen};
use crate::estimators::LocationEstimator;
use crate::io::{fmt_f64, Table};
use crate::numerics::EllipticalModel;
use crate::rng::{tag, StreamKey};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownConfig {
    pub estimator: LocationEstimator,
    pub d: usize,
    pub n: usize,
    pub eps_grid: Vec<f64>,
    /// Additive shift applied to contaminated cells.
    pub t_large: f64,
    /// Mean max-bias above which the estimator counts as broken down.
    pub threshold: f64,
    pub replications: usize,
    pub seed: u64,
    pub svg: bool,
}

impl Default for BreakdownConfig {
    fn default() -> Self {
        BreakdownConfig {
            estimator: LocationEstimator::Mcd { n_starts: 500 },
            d: 5,
            n: 100,
            eps_grid: (1..=25).map(|i| 0.02 * i as f64).collect(),
            t_large: 1e3,
            threshold: 10.0,
            replications: 10,
            seed: 0,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakdownResult {
    /// Smallest grid fraction whose mean max-bias exceeds the threshold.
    pub eps_star_hat: Option<f64>,
    /// Upper bound `ε₀(0, d)` for affine equivariant estimators.
    pub bound: f64,
}

/// Empirical cellwise breakdown point: the smallest grid `ε` at which the
/// mean largest-component bias under independent contamination of size
/// `t_large` exceeds `threshold`. Within a replication the cells contaminated
/// at a smaller `ε` stay contaminated at every larger one.
pub fn empirical_breakdown(cfg: &BreakdownConfig) -> Result<(BreakdownResult, ExperimentReport)> {
    if cfg.eps_grid.is_empty() || cfg.eps_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("contamination grid must be nonempty and strictly increasing"));
    }
    if cfg.d == 0 || cfg.n == 0 || cfg.replications == 0 {
        return Err(Error::invalid("d, n and replications must be positive"));
    }
    let key = StreamKey::new(cfg.seed).child(tag("breakdown"));
    let model = EllipticalModel::standard(cfg.d);

    let per_rep: Vec<Vec<f64>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let rk = key.child(tag("replication")).child(r as u64);
            let y = sample_clean(&model, cfg.n, rk);
            cfg.eps_grid
                .iter()
                .map(|&eps| {
                    let spec =
                        ContaminationSpec::new(ContaminationModel::Ficm, eps, OutlierGen::AdditiveShift { t: cfg.t_large })?;
                    let x = contaminate(&y, &spec, rk.child(tag("cells")))?.x;
                    Ok(match cfg.estimator.locate(&x, rk.child(tag(cfg.estimator.name()))) {
                        Ok(mu) if mu.iter().all(|v| v.is_finite()) => mu.amax(),
                        _ => f64::NAN,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut results = Table::new(["eps", "mean_max_bias", "stderr", "n_ok", "broken"]);
    let mut curve = Vec::with_capacity(cfg.eps_grid.len());
    let mut eps_star_hat = None;
    for (k, &eps) in cfg.eps_grid.iter().enumerate() {
        let b: Vec<f64> = per_rep.iter().map(|p| p[k]).collect();
        let (m, se, n_ok) = mean_se(&b);
        let broken = m > cfg.threshold;
        if broken && eps_star_hat.is_none() {
            eps_star_hat = Some(eps);
        }
        curve.push((eps, m, se));
        results.push(vec![fmt_f64(eps), fmt_f64(m), fmt_f64(se), n_ok.to_string(), (broken as u8).to_string()]);
    }
    let bound = epsilon0(0.0, cfg.d)?;
    let step = cfg.eps_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);

    let mut assertions = Vec::new();
    let drops: Vec<String> = curve
        .windows(2)
        .filter(|w| w[1].1 < w[0].1 - 3.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt())
        .map(|w| format!("ε={}: {:.4} → {:.4}", w[1].0, w[0].1, w[1].1))
        .collect();
    assertions.push(Assertion::new(
        "bias_monotone_in_eps",
        drops.is_empty(),
        if drops.is_empty() { "no drop beyond 3 stderr".to_string() } else { drops.join("; ") },
    ));
    if cfg.estimator.is_affine_equivariant() {
        let ok = eps_star_hat.is_some_and(|e| e <= bound + step + 1e-12);
        assertions.push(Assertion::new(
            "below_breakdown_bound",
            ok,
            format!("eps_star_hat = {eps_star_hat:?}, bound = {bound:.4}, grid step = {step:.4}"),
        ));
    }

    let result = BreakdownResult { eps_star_hat, bound };
    let svg = cfg.svg.then(|| {
        let s = Series { label: cfg.estimator.name().into(), points: curve.iter().map(|c| (c.0, c.1)).collect() };
        line_chart("Mean max-bias against contamination fraction", "ε", "mean max |T_j|", &[s])
    });
    let report = ExperimentReport {
        name: "breakdown".into(),
        config: serde_json::to_value(cfg)?,
        results,
        tables: Vec::new(),
        metrics: json!({ "eps_star_hat": eps_star_hat, "bound": bound, "grid_step": step }),
        assertions,
        svg,
    };
    Ok((result, report))
}
