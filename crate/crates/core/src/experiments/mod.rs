//! Reproduction scripts: the breakdown table, propagation of cellwise
//! outliers through linear combinations, bias curves, gross-error
//! sensitivity against dimension, and an empirical breakdown finder.
//!
//! Every experiment returns an [`ExperimentReport`] whose CSV payloads are a
//! pure function of the configuration, independent of the thread count.

mod bias;
mod breakdown;
mod ges_dim;
mod propagation;
mod report;
mod theory;

pub use bias::{bias_sweep, BiasSweepConfig};
pub use breakdown::{empirical_breakdown, BreakdownConfig, BreakdownResult};
pub use ges_dim::{ges_vs_dim, GesVsDimConfig};
pub use propagation::{propagation_demo, PropagationConfig, ASSERTION_MIN_N};
pub use report::{line_chart, write_config, Assertion, ExperimentReport, Series};
pub use theory::{epsilon0, min_dim_majority_contaminated, table1, theorem1_transform, TABLE1_DIMS};

use serde_json::json;

use crate::io::{fmt_f64, Table};
use crate::Result;

/// Two-decimal values of the breakdown bound at [`TABLE1_DIMS`].
pub const TABLE1_ROUNDED: [f64; 9] = [0.50, 0.29, 0.21, 0.16, 0.13, 0.07, 0.05, 0.03, 0.01];

/// The breakdown-bound table together with the dimensions at which a
/// majority of rows is expected to be contaminated.
pub fn table1_report() -> Result<ExperimentReport> {
    let mut results = Table::new(["d", "epsilon0", "rounded"]);
    let mut mismatches = Vec::new();
    for ((d, e), want) in table1().into_iter().zip(TABLE1_ROUNDED) {
        let rounded = (e * 100.0).round() / 100.0;
        if rounded != want {
            mismatches.push(format!("d={d}: {rounded} vs {want}"));
        }
        results.push(vec![d.to_string(), fmt_f64(e), format!("{rounded:.2}")]);
    }
    let d05 = min_dim_majority_contaminated(0.05)?;
    let d01 = min_dim_majority_contaminated(0.01)?;
    let assertions = vec![
        Assertion::new(
            "table_entries",
            mismatches.is_empty(),
            if mismatches.is_empty() { "all nine entries match".to_string() } else { mismatches.join("; ") },
        ),
        Assertion::new("majority_contaminated_at_eps_0.05", d05 == 14, format!("d = {d05}")),
        Assertion::new("majority_contaminated_at_eps_0.01", d01 == 69, format!("d = {d01}")),
    ];
    Ok(ExperimentReport {
        name: "table1".into(),
        config: json!({ "delta": 0.0, "dims": TABLE1_DIMS }),
        results,
        tables: Vec::new(),
        metrics: json!({ "min_dim_eps_0.05": d05, "min_dim_eps_0.01": d01 }),
        assertions,
        svg: None,
    })
}
