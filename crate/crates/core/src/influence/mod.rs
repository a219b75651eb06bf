//! Influence functions of location functionals under the contamination
//! models, evaluated at the core model.
//!
//! For a path `H(ε, z)` the influence function is `∂μ(H(ε, z))/∂ε` at
//! `ε = 0`. Under row-wise contamination this is the classical point-mass
//! influence; under cellwise contamination it is the sum of the
//! contributions of the single-cell replacements `H({k}, z)`.

mod closed;
mod g;
mod ges;
mod numeric;

pub use closed::if_surface;
pub use g::{g_function, GValue, Sampler};
pub use ges::{ges, GesResult, GesSearch};
pub use numeric::{if_numeric, NumericOptions};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::{calibrate_c, ArgConvention, EllipticalModel, RadialQuadrature, RhoSpec, DEFAULT_NODES};
use crate::rng::{tag, StreamKey};
use crate::{Error, Result};

/// Contamination path along which the derivative is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Fdcm,
    Ficm,
    Psicm,
    /// Partially clean cellwise contamination; its influence function
    /// coincides with the fully independent one.
    Pcicm,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Fdcm => "fdcm",
            ModelKind::Ficm => "ficm",
            ModelKind::Psicm => "psicm",
            ModelKind::Pcicm => "pcicm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "fdcm" => ModelKind::Fdcm,
            "ficm" => ModelKind::Ficm,
            "psicm" => ModelKind::Psicm,
            "pcicm" => ModelKind::Pcicm,
            _ => return None,
        })
    }
}

/// Which location functional is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    /// Affine-equivariant M/S location with `Σ₀` as scatter.
    Multivariate,
    /// One univariate M/S location per coordinate, scaled by `√σⱼⱼ`.
    Coordinatewise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_draws: usize,
    pub seed: u64,
    /// Draws per random substream.
    pub batch: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_draws: 200_000, seed: 0, batch: 4096 }
    }
}

impl McConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_draws < 2 || self.batch == 0 {
            return Err(Error::invalid("Monte Carlo needs at least 2 draws and a positive batch size"));
        }
        Ok(())
    }

    /// Batch index ranges covering `n_draws`.
    pub(crate) fn batches(&self) -> Vec<(usize, usize)> {
        (0..self.n_draws).step_by(self.batch).map(|s| (s, (s + self.batch).min(self.n_draws))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceResult {
    pub z: DVector<f64>,
    pub value: DVector<f64>,
    /// Monte Carlo standard errors; zero on closed-form paths.
    pub stderr: DVector<f64>,
}

impl InfluenceResult {
    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    /// Delta-method standard error of the Euclidean norm, ignoring the
    /// covariance between components.
    pub fn norm_stderr(&self) -> f64 {
        let n = self.value.norm();
        if n == 0.0 {
            return self.stderr.norm();
        }
        self.value.iter().zip(self.stderr.iter()).map(|(v, s)| (v / n * s).powi(2)).sum::<f64>().sqrt()
    }
}

/// `A_ψ = (2/d) E[ψ'(U) U] + E[ψ(U)]` for `U ~ χ²_d`, with `ψ` the derivative
/// of the loss in the squared distance. This is the scalar by which the
/// estimating function must be divided to give the influence function.
pub fn a_psi(rho: &RhoSpec, d: usize) -> Result<f64> {
    let c2 = rho.c * rho.c;
    let q = RadialQuadrature::new(d, DEFAULT_NODES, &[c2])?;
    let df = d as f64;
    let a = q.expect(|u| {
        let v = rho.eval_sq(u);
        2.0 / df * v.psi_prime * u + v.psi
    })?;
    if !(a > 0.0) {
        return Err(Error::Degenerate(format!("A_psi = {a} is not positive; the loss is miscalibrated")));
    }
    Ok(a)
}

/// Core-model draws shared by every evaluation of one context, so that
/// influence surfaces use common random numbers across `z`.
#[derive(Debug)]
pub(crate) struct CoreDraws {
    /// `Xᵢ − μ₀`, one draw per column.
    pub r: DMatrix<f64>,
    /// `Σ₀⁻¹ (Xᵢ − μ₀)`.
    pub pr: DMatrix<f64>,
    /// `(Xᵢ − μ₀)' Σ₀⁻¹ (Xᵢ − μ₀)`.
    pub q: Vec<f64>,
}

impl CoreDraws {
    fn generate(model: &EllipticalModel, mc: &McConfig) -> Self {
        let d = model.dim();
        let key = StreamKey::new(mc.seed).child(tag("influence-draws"));
        let batches = mc.batches();
        let parts: Vec<Vec<f64>> = batches
            .par_iter()
            .enumerate()
            .map(|(b, &(s, e))| {
                let mut rng = key.stream(b as u64);
                let mut out = Vec::with_capacity((e - s) * d);
                for _ in s..e {
                    let w = model.sample_spherical(&mut rng);
                    out.extend((model.lower() * w).iter());
                }
                out
            })
            .collect();
        let r = DMatrix::from_vec(d, mc.n_draws, parts.concat());
        let p = model.metric().inverse();
        let pr = &p * &r;
        let q = r.column_iter().zip(pr.column_iter()).map(|(a, b)| a.dot(&b)).collect();
        CoreDraws { r, pr, q }
    }
}

/// Everything needed to evaluate influence functions at one core model.
#[derive(Debug, Clone)]
pub struct InfluenceContext {
    model: EllipticalModel,
    rho: RhoSpec,
    functional: Functional,
    kind: ModelKind,
    mc: McConfig,
    a_psi: f64,
    precision: DMatrix<f64>,
    draws: Arc<CoreDraws>,
}

impl InfluenceContext {
    /// Context for the loss `rho`. For the coordinatewise functional `rho`
    /// acts on standardized univariate residuals.
    pub fn new(
        model: EllipticalModel,
        rho: RhoSpec,
        functional: Functional,
        kind: ModelKind,
        mc: McConfig,
    ) -> Result<Self> {
        mc.validate()?;
        let d_eff = match functional {
            Functional::Multivariate => model.dim(),
            Functional::Coordinatewise => 1,
        };
        let a_psi = a_psi(&rho, d_eff)?;
        let precision = model.metric().inverse();
        let draws = Arc::new(CoreDraws::generate(&model, &mc));
        Ok(InfluenceContext { model, rho, functional, kind, mc, a_psi, precision, draws })
    }

    /// Context for the Tukey-bisquare S-estimator with breakdown point `bp`,
    /// calibrated at the model dimension (multivariate) or at one dimension
    /// (coordinatewise).
    pub fn s_estimator(
        model: EllipticalModel,
        bp: f64,
        functional: Functional,
        kind: ModelKind,
        mc: McConfig,
    ) -> Result<Self> {
        let d_eff = match functional {
            Functional::Multivariate => model.dim(),
            Functional::Coordinatewise => 1,
        };
        let c = calibrate_c(d_eff, bp, ArgConvention::SquaredDistance)?;
        Self::new(model, RhoSpec::tukey(c, ArgConvention::SquaredDistance)?, functional, kind, mc)
    }

    /// The same context along a different contamination path, sharing draws.
    pub fn with_kind(&self, kind: ModelKind) -> Self {
        InfluenceContext { kind, ..self.clone() }
    }

    pub fn model(&self) -> &EllipticalModel {
        &self.model
    }

    pub fn rho(&self) -> &RhoSpec {
        &self.rho
    }

    pub fn functional(&self) -> Functional {
        self.functional
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn mc(&self) -> &McConfig {
        &self.mc
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn a_psi(&self) -> f64 {
        self.a_psi
    }

    pub(crate) fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub(crate) fn draws(&self) -> &CoreDraws {
        &self.draws
    }

    fn check_z(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: z.len() });
        }
        if let Some(v) = z.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "contamination point", value: *v });
        }
        Ok(())
    }

    /// Influence function at `z` along this context's contamination path.
    pub fn evaluate(&self, z: &DVector<f64>) -> Result<InfluenceResult> {
        match self.kind {
            ModelKind::Fdcm => self.if_fdcm(z),
            ModelKind::Ficm | ModelKind::Pcicm => self.if_ficm(z),
            ModelKind::Psicm => self.if_psicm(z),
        }
    }
}
