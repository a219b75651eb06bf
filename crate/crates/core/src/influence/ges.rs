use nalgebra::{DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Functional, InfluenceContext, McConfig, ModelKind};
use crate::rng::{tag, StreamKey};
use crate::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Search set for the gross-error sensitivity: rays from `μ₀` along the
/// coordinate axes, the all-ones diagonal and `n_random` random directions,
/// each scanned on a radial grid with a coarse draw budget; the best
/// `n_refine` grid points are then refined radially with the full budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GesSearch {
    pub n_random: usize,
    pub n_radial: usize,
    /// Largest Euclidean radius scanned; `None` picks twice the truncation
    /// radius along the longest axis of `Σ₀`.
    pub radial_max: Option<f64>,
    pub n_refine: usize,
    pub refine_iters: usize,
    /// Draws used during the grid scan (at most the context's budget).
    pub coarse_draws: usize,
    pub seed: u64,
}

impl Default for GesSearch {
    fn default() -> Self {
        GesSearch {
            n_random: 16,
            n_radial: 40,
            radial_max: None,
            n_refine: 3,
            refine_iters: 30,
            coarse_draws: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GesResult {
    pub value: f64,
    pub stderr: f64,
    pub argmax_z: DVector<f64>,
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
fn golden_max<F: FnMut(f64) -> Result<f64>>(mut f: F, mut lo: f64, mut hi: f64, iters: usize) -> Result<(f64, f64)> {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Supremum of `‖IF(z)‖₂` over the search set. Under row-wise contamination
/// of the multivariate functional, spherical symmetry reduces the problem to
/// the Mahalanobis radius along the longest axis of `Σ₀`.
pub fn ges(ctx: &InfluenceContext, search: &GesSearch) -> Result<GesResult> {
    let d = ctx.dim();
    let eig = SymmetricEigen::new(ctx.model().sigma0().clone());
    let (top, lambda) = eig.eigenvalues.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    let c = ctx.rho().c;

    if ctx.kind() == ModelKind::Fdcm && ctx.functional() == Functional::Multivariate {
        let rho = *ctx.rho();
        let (r, f) = golden_max(|r| Ok(r * rho.psi_sq(r * r)), 0.0, c, 200)?;
        let v = eig.eigenvectors.column(top).into_owned();
        return Ok(GesResult {
            value: lambda.sqrt() * f / ctx.a_psi(),
            stderr: 0.0,
            argmax_z: ctx.model().mu0() + v * (r * lambda.sqrt()),
        });
    }

    let mut dirs: Vec<DVector<f64>> = (0..d).map(|k| DVector::from_fn(d, |j, _| if j == k { 1.0 } else { 0.0 })).collect();
    if d > 1 {
        dirs.push(DVector::from_element(d, 1.0 / (d as f64).sqrt()));
    }
    let key = StreamKey::new(search.seed).child(tag("ges-directions"));
    for i in 0..search.n_random {
        let mut rng = key.stream(i as u64);
        let v = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        dirs.push(v.normalize());
    }

    let stretch = match ctx.functional() {
        Functional::Multivariate => 1.0,
        Functional::Coordinatewise => (d as f64).sqrt(),
    };
    let t_max = search.radial_max.unwrap_or(2.0 * c * lambda.sqrt() * stretch);
    let n_radial = search.n_radial.max(2);
    let step = t_max / n_radial as f64;

    let coarse = if search.coarse_draws < ctx.mc().n_draws && ctx.kind() != ModelKind::Fdcm {
        let mc = McConfig { n_draws: search.coarse_draws.max(2), ..*ctx.mc() };
        InfluenceContext::new(ctx.model().clone(), *ctx.rho(), ctx.functional(), ctx.kind(), mc)?
    } else {
        ctx.clone()
    };
    let mu0 = ctx.model().mu0();
    let mut scored: Vec<(f64, usize, usize)> = Vec::with_capacity(dirs.len() * n_radial);
    for (di, v) in dirs.iter().enumerate() {
        for i in 1..=n_radial {
            let z = mu0 + v * (step * i as f64);
            scored.push((coarse.evaluate(&z)?.norm(), di, i));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut best = GesResult { value: -1.0, stderr: 0.0, argmax_z: mu0.clone() };
    for &(_, di, i) in scored.iter().take(search.n_refine.max(1)) {
        let v = &dirs[di];
        let lo = step * (i as f64 - 1.0);
        let hi = step * (i as f64 + 1.0);
        let (t, _) = golden_max(|t| Ok(ctx.evaluate(&(mu0 + v * t))?.norm()), lo, hi, search.refine_iters)?;
        let z = mu0 + v * t;
        let r = ctx.evaluate(&z)?;
        if r.norm() > best.value {
            best = GesResult { value: r.norm(), stderr: r.norm_stderr(), argmax_z: z };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::EllipticalModel;

    #[test]
    fn golden_section_finds_interior_maximum() {
        let (x, f) = golden_max(|x| Ok(-(x - 0.3f64).powi(2)), 0.0, 1.0, 80).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!(f <= 0.0);
    }

    #[test]
    fn fdcm_radius_is_inside_truncation() {
        let mc = McConfig { n_draws: 100, seed: 0, batch: 100 };
        for d in [1, 3, 8] {
            let ctx = InfluenceContext::s_estimator(EllipticalModel::standard(d), 0.5, Functional::Multivariate, ModelKind::Fdcm, mc)
                .unwrap();
            let g = ges(&ctx, &GesSearch::default()).unwrap();
            let r = g.argmax_z.norm();
            let c = ctx.rho().c;
            assert!(r > 0.0 && r < c);
            // r (1 − r²/c²)² peaks at c/√5
            assert!((r - c / 5f64.sqrt()).abs() < 1e-6);
            assert!((ctx.if_fdcm(&g.argmax_z).unwrap().norm() - g.value).abs() < 1e-12);
        }
    }

    #[test]
    fn coordinatewise_fdcm_ges_is_sqrt_d_times_univariate() {
        let mc = McConfig { n_draws: 100, seed: 0, batch: 100 };
        let one =
            InfluenceContext::s_estimator(EllipticalModel::standard(1), 0.5, Functional::Coordinatewise, ModelKind::Fdcm, mc).unwrap();
        let g1 = ges(&one, &GesSearch::default()).unwrap().value;
        let four =
            InfluenceContext::s_estimator(EllipticalModel::standard(4), 0.5, Functional::Coordinatewise, ModelKind::Fdcm, mc).unwrap();
        let g4 = ges(&four, &GesSearch::default()).unwrap().value;
        assert!((g4 - 2.0 * g1).abs() < 1e-6 * g4, "{g4} vs {}", 2.0 * g1);
    }
}
