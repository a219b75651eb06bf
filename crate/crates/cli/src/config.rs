use std::path::PathBuf;

use opl_core::contamination::ContaminationModel;
use opl_core::estimators::LocationEstimator;
use opl_core::experiments::{BiasSweepConfig, BreakdownConfig, GesVsDimConfig, PropagationConfig};
use opl_core::influence::{Functional, GesSearch, McConfig, ModelKind};
use serde::{Deserialize, Serialize};

/// Fully resolved invocation. Written before any computation and sufficient
/// on its own to replay the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub output_dir: PathBuf,
    pub command: CommandConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum CommandConfig {
    Simulate(SimulateConfig),
    Estimate(EstimateConfig),
    Influence(InfluenceConfig),
    Ges(GesConfig),
    Table1,
    Fig2(GesVsDimConfig),
    Fig3(PropagationConfig),
    Fig4(BiasSweepConfig),
    Breakdown(BreakdownConfig),
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::Simulate(_) => "simulate",
            CommandConfig::Estimate(_) => "estimate",
            CommandConfig::Influence(_) => "influence",
            CommandConfig::Ges(_) => "ges",
            CommandConfig::Table1 => "table1",
            CommandConfig::Fig2(_) => "fig2",
            CommandConfig::Fig3(_) => "fig3",
            CommandConfig::Fig4(_) => "fig4",
            CommandConfig::Breakdown(_) => "breakdown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierKind {
    /// `Z = Y + shift` on contaminated cells.
    Additive,
    /// `Z ~ N(shift, 1)` independently per cell.
    Gaussian,
    /// `Z = (shift, …, shift)`.
    Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub model: ContaminationModel,
    pub eps: f64,
    pub d: usize,
    pub n: usize,
    pub r: f64,
    pub outlier: OutlierKind,
    pub shift: f64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub input: PathBuf,
    pub estimator: LocationEstimator,
    pub out: PathBuf,
}

/// Contamination-free Gaussian model `N(0, Σ)` with unit variances and
/// common correlation `r`, and the S-functional evaluated on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSetup {
    pub kind: ModelKind,
    pub d: usize,
    pub r: f64,
    pub functional: Functional,
    pub bp: f64,
    pub mc: McConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceConfig {
    pub setup: FunctionalSetup,
    pub grid: Vec<f64>,
    /// Coordinate (1-based) scanned alone; otherwise the first two are
    /// scanned jointly.
    pub axis: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GesConfig {
    pub setup: FunctionalSetup,
    pub search: GesSearch,
}
