use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use opl_core::contamination::ContaminationModel;
use opl_core::estimators::LocationEstimator;
use opl_core::experiments::{BiasSweepConfig, BreakdownConfig, GesVsDimConfig, PropagationConfig};
use opl_core::influence::{Functional, GesSearch, McConfig, ModelKind};

use crate::config::{
    CommandConfig, EstimateConfig, FunctionalSetup, GesConfig, InfluenceConfig, OutlierKind, RunConfig, SimulateConfig,
};

const DEFAULT_OUT_DIR: &str = "out";

/// Robust location/scatter under cellwise and rowwise contamination.
#[derive(Debug, Parser)]
#[command(name = "opl", version, about)]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, env = "OPL_SEED", default_value_t = 0, global = true)]
    pub seed: u64,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory receiving `<command>/config.json`, results and summaries.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Draw a contaminated Gaussian sample and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit a location/scatter estimator to a CSV dataset.
    Estimate(EstimateArgs),
    /// Influence function of the S-functional on a grid of points.
    Influence(InfluenceArgs),
    /// Gross-error sensitivity of the S-functional.
    Ges(GesArgs),
    /// Cellwise breakdown bound for affine equivariant estimators.
    Table1,
    /// Gross-error sensitivity against dimension.
    Fig2(Fig2Args),
    /// Propagation of cellwise outliers through linear combinations.
    Fig3(Fig3Args),
    /// Largest componentwise bias against outlier size.
    Fig4(Fig4Args),
    /// Empirical cellwise breakdown point.
    Breakdown(BreakdownArgs),
    /// Re-run from an emitted config.json.
    Replay {
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// fdcm, ficm, psicm, pcicm-i or pcicm-ii.
    #[arg(long, default_value = "ficm")]
    pub model: String,
    /// Clean-case mixing weight of pcicm-i.
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    /// Common correlation of the clean Gaussian.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub r: f64,
    #[arg(long, value_enum, default_value = "additive")]
    pub outlier: OutlierArg,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub shift: f64,
    /// Output CSV (default: `<out-dir>/simulate/data.csv`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum OutlierArg {
    Additive,
    Gaussian,
    Point,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// mean, coord_median, coord_s, mcd, mve or s.
    #[arg(long, default_value = "mcd")]
    pub estimator: String,
    /// Breakdown point of the S-type estimators.
    #[arg(long)]
    pub bp: Option<f64>,
    /// Random starts (mcd, s) or elemental trials (mve).
    #[arg(long)]
    pub starts: Option<usize>,
    /// Output JSON (default: `<out-dir>/estimate/estimate.json`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SetupArgs {
    /// fdcm, ficm, psicm or pcicm.
    #[arg(long, default_value = "ficm", value_parser = parse_kind)]
    pub kind: ModelKind,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub r: f64,
    #[arg(long, value_enum, default_value = "multivariate")]
    pub functional: FunctionalArg,
    #[arg(long, default_value_t = 0.5)]
    pub bp: f64,
    /// Monte Carlo draws for the cellwise terms.
    #[arg(long, default_value_t = McConfig::default().n_draws)]
    pub draws: usize,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum FunctionalArg {
    Multivariate,
    Coordinatewise,
}

#[derive(Debug, Args)]
pub struct InfluenceArgs {
    #[command(flatten)]
    pub setup: SetupArgs,
    /// `start:stop:step`, applied to each scanned coordinate.
    #[arg(long, default_value = "-8:8:0.25", allow_hyphen_values = true)]
    pub grid: String,
    /// Scan only this coordinate (1-based).
    #[arg(long)]
    pub axis: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GesArgs {
    #[command(flatten)]
    pub setup: SetupArgs,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = GesSearch::default().n_random)]
    pub n_random: usize,
    #[arg(long, default_value_t = GesSearch::default().n_radial)]
    pub n_radial: usize,
    #[arg(long, default_value_t = GesSearch::default().coarse_draws)]
    pub coarse_draws: usize,
}

impl SearchArgs {
    fn resolve(&self, seed: u64) -> GesSearch {
        GesSearch {
            n_random: self.n_random,
            n_radial: self.n_radial,
            coarse_draws: self.coarse_draws,
            seed,
            ..GesSearch::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct Fig2Args {
    #[arg(long, default_value = "1:20:1")]
    pub dims: String,
    #[arg(long, default_value_t = 0.5)]
    pub bp: f64,
    #[arg(long, default_value_t = McConfig::default().n_draws)]
    pub draws: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub no_svg: bool,
}

#[derive(Debug, Args)]
pub struct Fig3Args {
    #[arg(long, default_value_t = PropagationConfig::default().n)]
    pub n: usize,
    #[arg(long, default_value_t = PropagationConfig::default().eps)]
    pub eps: f64,
    #[arg(long, default_value_t = PropagationConfig::default().shift_mean, allow_hyphen_values = true)]
    pub shift_mean: f64,
    #[arg(long, default_value_t = PropagationConfig::default().shift_var)]
    pub shift_var: f64,
    #[arg(long, default_value_t = PropagationConfig::default().bins)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct Fig4Args {
    #[arg(long, default_value_t = 15)]
    pub d: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0.15)]
    pub eps: f64,
    /// Outlier sizes, `start:stop:step`.
    #[arg(long, default_value = "0:100:5", allow_hyphen_values = true)]
    pub t: String,
    /// Comma-separated estimator names.
    #[arg(long, default_value = "mean,coord_median,mcd,mve")]
    pub estimators: String,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Random starts of mcd/s and trials of mve.
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub no_svg: bool,
}

#[derive(Debug, Args)]
pub struct BreakdownArgs {
    #[arg(long, default_value = "mcd")]
    pub estimator: String,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value = "0.02:0.5:0.02")]
    pub eps_grid: String,
    #[arg(long, default_value_t = BreakdownConfig::default().t_large)]
    pub t_large: f64,
    #[arg(long, default_value_t = BreakdownConfig::default().threshold)]
    pub threshold: f64,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long)]
    pub no_svg: bool,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| format!("unknown contamination kind `{s}` (fdcm, ficm, psicm, pcicm)"))
}

/// Inclusive `start:stop:step` grid; a single number is a one-point grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.trim().parse::<f64>().with_context(|| format!("bad number `{p}` in grid `{s}`"));
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b, h] => {
            let (a, b, h) = (num(a)?, num(b)?, num(h)?);
            if !(a.is_finite() && b.is_finite() && h.is_finite()) || h <= 0.0 || b < a {
                bail!("grid `{s}` needs finite start <= stop and a positive step");
            }
            let steps = ((b - a) / h + 1e-9).floor() as usize;
            if steps > 1_000_000 {
                bail!("grid `{s}` has too many points");
            }
            // snap to 12 significant digits so that 0.02 * 3 prints as 0.06
            Ok((0..=steps)
                .map(|i| {
                    let v = a + i as f64 * h;
                    if v == 0.0 {
                        0.0
                    } else {
                        let scale = 10f64.powi(11 - v.abs().log10().floor() as i32);
                        (v * scale).round() / scale
                    }
                })
                .collect())
        }
        _ => bail!("grid `{s}` is not of the form start:stop:step"),
    }
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    parse_grid(s)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                bail!("dimension grid `{s}` must contain positive integers")
            }
        })
        .collect()
}

fn parse_model(name: &str, gamma: f64) -> Result<ContaminationModel> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "fdcm" => ContaminationModel::Fdcm,
        "ficm" => ContaminationModel::Ficm,
        "psicm" => ContaminationModel::Psicm,
        "pcicm-i" | "pcicm" => ContaminationModel::PcicmI { gamma },
        "pcicm-ii" => ContaminationModel::PcicmIi,
        _ => bail!("unknown contamination model `{name}` (fdcm, ficm, psicm, pcicm-i, pcicm-ii)"),
    })
}

pub fn parse_estimator(name: &str, bp: Option<f64>, starts: Option<usize>) -> Result<LocationEstimator> {
    let Some(mut est) = LocationEstimator::from_name(name.trim()) else {
        bail!("unknown estimator `{name}` (mean, coord_median, coord_s, mcd, mve, s)");
    };
    match &mut est {
        LocationEstimator::CoordS { bp: b } => *b = bp.unwrap_or(*b),
        LocationEstimator::S { bp: b, n_starts } => {
            *b = bp.unwrap_or(*b);
            *n_starts = starts.unwrap_or(*n_starts);
        }
        LocationEstimator::Mcd { n_starts } => *n_starts = starts.unwrap_or(*n_starts),
        LocationEstimator::Mve { n_trials } => *n_trials = starts.unwrap_or(*n_trials),
        LocationEstimator::Mean | LocationEstimator::CoordMedian => {}
    }
    Ok(est)
}

impl SetupArgs {
    fn resolve(&self, seed: u64) -> FunctionalSetup {
        FunctionalSetup {
            kind: self.kind,
            d: self.d,
            r: self.r,
            functional: match self.functional {
                FunctionalArg::Multivariate => Functional::Multivariate,
                FunctionalArg::Coordinatewise => Functional::Coordinatewise,
            },
            bp: self.bp,
            mc: McConfig { n_draws: self.draws, seed, ..McConfig::default() },
        }
    }
}

impl Cli {
    /// Expands defaults into a [`RunConfig`]; `replay` loads it from disk and
    /// lets explicit `--threads`/`--out-dir` override the stored values.
    pub fn resolve(self) -> Result<RunConfig> {
        let seed = self.seed;
        let threads = self.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if threads == 0 {
            bail!("--threads must be positive");
        }
        let output_dir = self.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

        let command = match self.command {
            Cmd::Replay { config } => {
                let text = std::fs::read_to_string(&config).map_err(opl_core::Error::from)?;
                let mut run: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| opl_core::Error::Parse(format!("{}: {e}", config.display())))?;
                if let Some(t) = self.threads {
                    run.threads = t;
                }
                if let Some(dir) = self.out_dir {
                    run.output_dir = dir;
                }
                return Ok(run);
            }
            Cmd::Simulate(a) => CommandConfig::Simulate(SimulateConfig {
                model: parse_model(&a.model, a.gamma)?,
                eps: a.eps,
                d: a.d,
                n: a.n,
                r: a.r,
                outlier: match a.outlier {
                    OutlierArg::Additive => OutlierKind::Additive,
                    OutlierArg::Gaussian => OutlierKind::Gaussian,
                    OutlierArg::Point => OutlierKind::Point,
                },
                shift: a.shift,
                out: a.out.unwrap_or_else(|| output_dir.join("simulate").join("data.csv")),
            }),
            Cmd::Estimate(a) => CommandConfig::Estimate(EstimateConfig {
                input: a.input,
                estimator: parse_estimator(&a.estimator, a.bp, a.starts)?,
                out: a.out.unwrap_or_else(|| output_dir.join("estimate").join("estimate.json")),
            }),
            Cmd::Influence(a) => {
                let grid = parse_grid(&a.grid)?;
                if let Some(k) = a.axis {
                    if k == 0 || k > a.setup.d {
                        bail!("--axis must lie in 1..={}", a.setup.d);
                    }
                }
                CommandConfig::Influence(InfluenceConfig { setup: a.setup.resolve(seed), grid, axis: a.axis })
            }
            Cmd::Ges(a) => {
                CommandConfig::Ges(GesConfig { setup: a.setup.resolve(seed), search: a.search.resolve(seed) })
            }
            Cmd::Table1 => CommandConfig::Table1,
            Cmd::Fig2(a) => CommandConfig::Fig2(GesVsDimConfig {
                d_grid: parse_dims(&a.dims)?,
                bp: a.bp,
                mc: McConfig { n_draws: a.draws, seed, ..McConfig::default() },
                search: a.search.resolve(seed),
                svg: !a.no_svg,
            }),
            Cmd::Fig3(a) => CommandConfig::Fig3(PropagationConfig {
                n: a.n,
                eps: a.eps,
                shift_mean: a.shift_mean,
                shift_var: a.shift_var,
                bins: a.bins,
                seed,
                ..PropagationConfig::default()
            }),
            Cmd::Fig4(a) => CommandConfig::Fig4(BiasSweepConfig {
                d: a.d,
                n: a.n,
                eps: a.eps,
                t_grid: parse_grid(&a.t)?,
                estimators: a
                    .estimators
                    .split(',')
                    .map(|s| parse_estimator(s, None, a.starts))
                    .collect::<Result<_>>()?,
                replications: a.reps,
                seed,
                svg: !a.no_svg,
            }),
            Cmd::Breakdown(a) => CommandConfig::Breakdown(BreakdownConfig {
                estimator: parse_estimator(&a.estimator, None, a.starts)?,
                d: a.d,
                n: a.n,
                eps_grid: parse_grid(&a.eps_grid)?,
                t_large: a.t_large,
                threshold: a.threshold,
                replications: a.reps,
                seed,
                svg: !a.no_svg,
            }),
        };
        Ok(RunConfig { seed, threads, output_dir, command })
    }
}
