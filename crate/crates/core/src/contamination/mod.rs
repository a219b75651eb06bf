//! Contamination-indicator laws and the generator `X = (I − B)Y + BZ`.
//!
//! Every supported model is an exchangeable mixture of three branches: the row
//! is fully contaminated, fully clean, or has independent Bernoulli(β) cells.
//! [`IndicatorLaw`] carries those branch probabilities and is the single source
//! for both sampling and the closed-form cell-count probabilities.

mod generate;

pub use generate::{contaminate, sample_clean, sample_h_i_z, sample_indicators, Contaminated};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContaminationModel {
    /// Fully dependent: the whole row is contaminated or clean.
    Fdcm,
    /// Fully independent: each cell contaminated independently.
    Ficm,
    /// Partially spoiled: fully spoiled with prob `ε/(2−ε)`, otherwise cells
    /// independently with prob `ε/2`.
    Psicm,
    /// Partially clean, first parameterization: clean with prob `1−γ`,
    /// otherwise cells independently with prob `ε/γ`.
    PcicmI { gamma: f64 },
    /// Partially clean, second parameterization: clean with prob `1−√ε`,
    /// otherwise cells independently with prob `√ε`.
    PcicmIi,
}

impl ContaminationModel {
    pub fn name(&self) -> &'static str {
        match self {
            ContaminationModel::Fdcm => "fdcm",
            ContaminationModel::Ficm => "ficm",
            ContaminationModel::Psicm => "psicm",
            ContaminationModel::PcicmI { .. } => "pcicm-i",
            ContaminationModel::PcicmIi => "pcicm-ii",
        }
    }
}

/// Distribution of the outlier vector `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutlierGen {
    PointMass { z: Vec<f64> },
    /// Independent `N(mean_j, var)` per cell.
    GaussianShift { mean: Vec<f64>, var: f64 },
    /// `Z = Y + t` on contaminated cells.
    AdditiveShift { t: f64 },
}

impl OutlierGen {
    fn check_dim(&self, d: usize) -> Result<()> {
        let len = match self {
            OutlierGen::PointMass { z } => z.len(),
            OutlierGen::GaussianShift { mean, var } => {
                if !(var.is_finite() && *var > 0.0) {
                    return Err(Error::invalid(format!("outlier variance must be positive, got {var}")));
                }
                mean.len()
            }
            OutlierGen::AdditiveShift { t } => {
                if !t.is_finite() {
                    return Err(Error::invalid("shift must be finite"));
                }
                d
            }
        };
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, found: len });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub model: ContaminationModel,
    pub epsilon: f64,
    pub outlier: OutlierGen,
}

/// Three-branch mixture law of the indicator vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorLaw {
    pub p_all: f64,
    pub p_none: f64,
    pub beta: f64,
}

impl IndicatorLaw {
    pub fn new(model: ContaminationModel, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid(format!("epsilon must lie in [0, 1], got {epsilon}")));
        }
        let law = match model {
            ContaminationModel::Fdcm => IndicatorLaw { p_all: epsilon, p_none: 1.0 - epsilon, beta: 0.0 },
            ContaminationModel::Ficm => IndicatorLaw { p_all: 0.0, p_none: 0.0, beta: epsilon },
            ContaminationModel::Psicm => {
                IndicatorLaw { p_all: epsilon / (2.0 - epsilon), p_none: 0.0, beta: epsilon / 2.0 }
            }
            ContaminationModel::PcicmI { gamma } => {
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
                }
                if epsilon > gamma {
                    return Err(Error::invalid(format!(
                        "PCICM-i needs epsilon <= gamma, got epsilon {epsilon} > gamma {gamma}"
                    )));
                }
                IndicatorLaw { p_all: 0.0, p_none: 1.0 - gamma, beta: epsilon / gamma }
            }
            ContaminationModel::PcicmIi => {
                let a = epsilon.sqrt();
                IndicatorLaw { p_all: 0.0, p_none: 1.0 - a, beta: a }
            }
        };
        Ok(law)
    }

    fn p_independent(&self) -> f64 {
        (1.0 - self.p_all - self.p_none).max(0.0)
    }

    /// Probability of exactly `k` contaminated cells out of `d`.
    pub fn delta_k(&self, d: usize, k: usize) -> Result<f64> {
        if k > d {
            return Err(Error::invalid(format!("cell count {k} exceeds dimension {d}")));
        }
        let mut p = self.p_independent() * binomial_pmf(d, k, self.beta);
        if k == d {
            p += self.p_all;
        }
        if k == 0 {
            p += self.p_none;
        }
        Ok(p)
    }
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    let k_small = k.min(n - k);
    let mut choose = 1.0;
    for i in 0..k_small {
        choose = choose * (n - i) as f64 / (i + 1) as f64;
    }
    choose * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

impl ContaminationSpec {
    pub fn new(model: ContaminationModel, epsilon: f64, outlier: OutlierGen) -> Result<Self> {
        IndicatorLaw::new(model, epsilon)?;
        Ok(ContaminationSpec { model, epsilon, outlier })
    }

    pub fn law(&self) -> Result<IndicatorLaw> {
        IndicatorLaw::new(self.model, self.epsilon)
    }

    pub fn validate(&self, d: usize) -> Result<IndicatorLaw> {
        self.outlier.check_dim(d)?;
        self.law()
    }

    pub fn point_mass(&self) -> Option<DVector<f64>> {
        match &self.outlier {
            OutlierGen::PointMass { z } => Some(DVector::from_column_slice(z)),
            _ => None,
        }
    }
}

/// Probability of exactly `k` contaminated cells in a `d`-dimensional row.
pub fn delta_k(spec: &ContaminationSpec, d: usize, k: usize) -> Result<f64> {
    spec.law()?.delta_k(d, k)
}

/// Probability that a row is perfectly observed.
pub fn clean_case_prob(spec: &ContaminationSpec, d: usize) -> Result<f64> {
    delta_k(spec, d, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(model: ContaminationModel, eps: f64) -> ContaminationSpec {
        ContaminationSpec::new(model, eps, OutlierGen::AdditiveShift { t: 10.0 }).unwrap()
    }

    fn all_models() -> Vec<ContaminationModel> {
        vec![
            ContaminationModel::Fdcm,
            ContaminationModel::Ficm,
            ContaminationModel::Psicm,
            ContaminationModel::PcicmI { gamma: 0.6 },
            ContaminationModel::PcicmIi,
        ]
    }

    #[test]
    fn fdcm_mass_only_at_extremes() {
        let s = spec(ContaminationModel::Fdcm, 0.2);
        assert_eq!(delta_k(&s, 7, 3).unwrap(), 0.0);
        assert!((delta_k(&s, 7, 0).unwrap() - 0.8).abs() < 1e-15);
        assert!((delta_k(&s, 7, 7).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn ficm_binomial_cell_counts() {
        let s = spec(ContaminationModel::Ficm, 0.3);
        assert!((delta_k(&s, 2, 0).unwrap() - 0.49).abs() < 1e-14);
        assert!((delta_k(&s, 2, 1).unwrap() - 0.42).abs() < 1e-14);
        assert!((delta_k(&s, 2, 2).unwrap() - 0.09).abs() < 1e-14);
        assert!(delta_k(&s, 2, 3).is_err());
    }

    #[test]
    fn clean_case_thresholds() {
        let s05 = spec(ContaminationModel::Ficm, 0.05);
        assert!((clean_case_prob(&s05, 14).unwrap() - 0.4877).abs() < 1e-4);
        assert!((clean_case_prob(&s05, 13).unwrap() - 0.5133).abs() < 1e-4);
        let s01 = spec(ContaminationModel::Ficm, 0.01);
        assert!((clean_case_prob(&s01, 69).unwrap() - 0.4998).abs() < 1e-4);
        let f = spec(ContaminationModel::Fdcm, 0.3);
        for d in [1, 4, 50] {
            assert!((clean_case_prob(&f, d).unwrap() - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn marginal_identity_on_grid() {
        for model in all_models() {
            for eps in [0.0, 0.01, 0.1, 0.3, 0.5] {
                for d in [1, 2, 5, 15] {
                    let s = spec(model, eps);
                    let total: f64 = (0..=d).map(|k| delta_k(&s, d, k).unwrap()).sum();
                    let mean: f64 = (0..=d).map(|k| k as f64 * delta_k(&s, d, k).unwrap()).sum();
                    assert!((total - 1.0).abs() < 1e-12, "{model:?} {eps} {d}");
                    assert!((mean - d as f64 * eps).abs() < 1e-12, "{model:?} {eps} {d}: {mean}");
                }
            }
        }
    }

    #[test]
    fn pcicm_i_requires_eps_below_gamma() {
        let r = ContaminationSpec::new(
            ContaminationModel::PcicmI { gamma: 0.2 },
            0.3,
            OutlierGen::AdditiveShift { t: 1.0 },
        );
        assert!(r.is_err());
        assert!(IndicatorLaw::new(ContaminationModel::PcicmI { gamma: 1.0 }, 0.1).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let s = ContaminationSpec::new(
            ContaminationModel::PcicmI { gamma: 0.5 },
            0.1,
            OutlierGen::GaussianShift { mean: vec![10.0, 10.0], var: 1.0 },
        )
        .unwrap();
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["model"]["kind"], "pcicm-i");
        assert_eq!(v["model"]["gamma"], 0.5);
        assert_eq!(v["outlier"]["kind"], "gaussian-shift");
        let back: ContaminationSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
