use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{Assertion, ExperimentReport};
use crate::contamination::{contaminate, sample_clean, ContaminationModel, ContaminationSpec, OutlierGen};
use crate::estimators::median_of;
use crate::io::{fmt_f64, Table};
use crate::numerics::EllipticalModel;
use crate::rng::{tag, StreamKey};
use crate::{Error, Result};

/// Sample size from which the distributional claims are asserted.
pub const ASSERTION_MIN_N: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub n: usize,
    pub eps: f64,
    pub shift_mean: f64,
    pub shift_var: f64,
    /// Rows are the coefficient vectors of the linear combinations.
    pub transform: [[f64; 2]; 2],
    pub bins: usize,
    pub seed: u64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            n: 20,
            eps: 0.3,
            shift_mean: 10.0,
            shift_var: 1.0,
            transform: [[0.64, 0.77], [0.78, 0.62]],
            bins: 24,
            seed: 0,
        }
    }
}

/// Cellwise-contaminated bivariate data and two linear combinations of its
/// columns: histograms, medians and the distribution of contaminated cells
/// per row.
pub fn propagation_demo(cfg: &PropagationConfig) -> Result<ExperimentReport> {
    if cfg.n == 0 || cfg.bins == 0 {
        return Err(Error::invalid("n and bins must be positive"));
    }
    let key = StreamKey::new(cfg.seed).child(tag("propagation"));
    let model = EllipticalModel::standard(2);
    let y = sample_clean(&model, cfg.n, key);
    let spec = ContaminationSpec::new(
        ContaminationModel::Ficm,
        cfg.eps,
        OutlierGen::GaussianShift { mean: vec![cfg.shift_mean; 2], var: cfg.shift_var },
    )?;
    let data = contaminate(&y, &spec, key)?;
    let a = DMatrix::from_fn(2, 2, |i, j| cfg.transform[i][j]);
    let l = &data.x * a.transpose();

    let columns: [(&str, Vec<f64>); 4] = [
        ("X1", data.x.column(0).iter().copied().collect()),
        ("X2", data.x.column(1).iter().copied().collect()),
        ("L1", l.column(0).iter().copied().collect()),
        ("L2", l.column(1).iter().copied().collect()),
    ];
    let lo = columns.iter().flat_map(|c| c.1.iter()).copied().fold(f64::INFINITY, f64::min).floor();
    let hi = columns.iter().flat_map(|c| c.1.iter()).copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let width = (hi - lo) / cfg.bins as f64;

    let mut results = Table::new(["column", "bin_lo", "bin_hi", "count"]);
    let mut medians = serde_json::Map::new();
    for (name, values) in &columns {
        let mut counts = vec![0usize; cfg.bins];
        for v in values {
            let b = (((v - lo) / width) as usize).min(cfg.bins - 1);
            counts[b] += 1;
        }
        for (b, c) in counts.iter().enumerate() {
            let b0 = lo + width * b as f64;
            results.push(vec![name.to_string(), fmt_f64(b0), fmt_f64(b0 + width), c.to_string()]);
        }
        medians.insert(name.to_string(), json!(median_of(&mut values.clone())));
    }

    let counts = data.row_counts();
    let frac: Vec<f64> = (0..=2).map(|k| counts.iter().filter(|&&c| c == k).count() as f64 / cfg.n as f64).collect();
    let expected = [(1.0 - cfg.eps).powi(2), 2.0 * cfg.eps * (1.0 - cfg.eps), cfg.eps * cfg.eps];
    let cells_near_shift =
        data.b.iter().filter(|&&b| b == 1).count() as f64 / (2 * cfg.n) as f64;

    let mut assertions = Vec::new();
    if cfg.n >= ASSERTION_MIN_N {
        let gap = frac.iter().zip(&expected).map(|(f, e)| (f - e).abs()).fold(0.0, f64::max);
        assertions.push(Assertion::new(
            "cell_count_fractions",
            gap <= 0.01,
            format!("observed {frac:.4?}, expected {expected:.4?}, max gap {gap:.4}"),
        ));
        if cfg.eps == 0.3 && cfg.shift_mean == 10.0 {
            let m_x1 = medians["X1"].as_f64().unwrap_or(f64::NAN);
            let m_l1 = medians["L1"].as_f64().unwrap_or(f64::NAN);
            assertions.push(Assertion::new("median_x1_below_0.6", m_x1 < 0.6, format!("median X1 = {m_x1:.4}")));
            assertions.push(Assertion::new("median_l1_above_1", m_l1 > 1.0, format!("median L1 = {m_l1:.4}")));
        }
    }

    Ok(ExperimentReport {
        name: "fig3".into(),
        config: serde_json::to_value(cfg)?,
        results,
        tables: Vec::new(),
        metrics: json!({
            "medians": medians,
            "row_fractions": {"observed": frac, "expected": expected},
            "contaminated_cell_fraction": cells_near_shift,
        }),
        assertions,
        svg: None,
    })
}
