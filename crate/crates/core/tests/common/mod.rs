#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use opl_core::contamination::{contaminate, sample_clean, ContaminationModel, ContaminationSpec, OutlierGen};
use opl_core::estimators::{
    coord_median, m_location_from, mcd, mve, s_estimate, sample_mean, LocationEstimator, McdOptions, MveOptions,
    SOptions,
};
use opl_core::numerics::{calibrate_c, ArgConvention, EllipticalModel, RhoSpec};
use opl_core::rng::StreamKey;
use rand::Rng;
use rand_distr::StandardNormal;

pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

pub fn report(checks: &[Check]) -> bool {
    for c in checks {
        eprintln!("    {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.passed)
}

pub fn s_rho(d: usize, bp: f64) -> RhoSpec {
    let c = calibrate_c(d, bp, ArgConvention::SquaredDistance).unwrap();
    RhoSpec::tukey(c, ArgConvention::SquaredDistance).unwrap()
}

/// Cellwise-contaminated equicorrelated Gaussian sample.
pub fn contaminated_sample(n: usize, d: usize, eps: f64, seed: u64) -> DMatrix<f64> {
    let model = EllipticalModel::equicorrelated(d, 0.5).unwrap();
    let y = sample_clean(&model, n, StreamKey::new(seed));
    let spec = ContaminationSpec::new(ContaminationModel::Ficm, eps, OutlierGen::AdditiveShift { t: 6.0 }).unwrap();
    contaminate(&y, &spec, StreamKey::new(seed).child(1)).unwrap().x
}

/// Random well-conditioned affine map `x ↦ Ax + b`.
pub fn random_affine(d: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = StreamKey::new(seed).stream(0);
    loop {
        let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sv = a.clone().svd(false, false).singular_values;
        let cond = sv.max() / sv.min();
        if cond < 50.0 {
            let b = DVector::from_fn(d, |_, _| 5.0 * rng.sample::<f64, _>(StandardNormal));
            return (a, b);
        }
    }
}

pub fn apply(x: &DMatrix<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let mut y = x * a.transpose();
    for mut r in y.row_iter_mut() {
        r += b.transpose();
    }
    y
}

fn rel_gap(got: &DVector<f64>, want: &DVector<f64>) -> f64 {
    (got - want).amax() / (1.0 + want.amax())
}

pub const EQUIVARIANT: [&str; 5] = ["mean", "m", "s", "mcd", "mve"];

/// Location of `x` by the named affine-equivariant estimator. The M-estimate
/// uses the sample covariance as scatter and the supplied start.
pub fn locate(name: &str, x: &DMatrix<f64>, start: &DVector<f64>, key: StreamKey) -> DVector<f64> {
    let d = x.ncols();
    match name {
        "mean" => sample_mean(x).unwrap().mu,
        "m" => {
            let cov = sample_mean(x).unwrap().sigma.unwrap();
            m_location_from(x, &cov, &s_rho(d, 0.5), start).unwrap().est.mu
        }
        "s" => s_estimate(x, &s_rho(d, 0.5), 0.5, SOptions::default(), key).unwrap().est.mu,
        "mcd" => mcd(x, McdOptions { h: None, n_starts: 100 }, key).unwrap().est.mu,
        "mve" => mve(x, MveOptions { n_trials: 100 }, key).unwrap().est.mu,
        _ => unreachable!(),
    }
}

pub fn affine_equivariance(n_transforms: usize) -> Vec<Check> {
    let (n, d) = (60, 3);
    let mut checks = Vec::new();
    for name in EQUIVARIANT {
        let mut worst = 0.0f64;
        for k in 0..n_transforms {
            let x = contaminated_sample(n, d, 0.1, 100 + k as u64);
            let (a, b) = random_affine(d, 500 + k as u64);
            let key = StreamKey::new(k as u64);
            let start = coord_median(&x).unwrap();
            let base = locate(name, &x, &start, key);
            let moved = locate(name, &apply(&x, &a, &b), &(&a * &start + &b), key);
            worst = worst.max(rel_gap(&moved, &(&a * base + &b)));
        }
        checks.push(Check::new(
            format!("affine_equivariance_{name}"),
            worst < 1e-6,
            format!("worst relative residual {worst:.2e} over {n_transforms} transforms"),
        ));
    }
    checks
}

/// A rotation under which the coordinatewise median does not commute with
/// the map, on cellwise-contaminated data.
pub fn coord_median_witness() -> Check {
    let x = contaminated_sample(200, 2, 0.3, 77);
    let mut best = 0.0f64;
    for k in 1..12 {
        let th = k as f64 * std::f64::consts::PI / 12.0;
        let a = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let b = DVector::zeros(2);
        let gap = (coord_median(&apply(&x, &a, &b)).unwrap() - &a * coord_median(&x).unwrap()).amax();
        best = best.max(gap);
    }
    Check::new("coord_median_not_equivariant", best > 1e-3, format!("largest gap over rotations {best:.4}"))
}

pub fn weighted_mean_and_constraints() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut worst_w = 0.0f64;
    let mut worst_s = 0.0f64;
    let mut mcd_monotone = true;
    let mut weights_ok = true;
    let mut weight_range = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..10u64 {
        let d = 2 + (seed as usize % 3);
        let n = 40 + 10 * seed as usize;
        let x = contaminated_sample(n, d, 0.1, 1000 + seed);
        let key = StreamKey::new(seed);

        let cov = sample_mean(&x).unwrap().sigma.unwrap();
        let m = m_location_from(&x, &cov, &s_rho(d, 0.5), &coord_median(&x).unwrap()).unwrap();
        worst_w = worst_w.max(m.w.residual(&x, &m.est.mu));

        let s = s_estimate(&x, &s_rho(d, 0.5), 0.5, SOptions::default(), key).unwrap();
        worst_w = worst_w.max(s.w.residual(&x, &s.est.mu));
        worst_s = worst_s.max(s.constraint_residual);

        let v = mve(&x, MveOptions { n_trials: 100 }, key).unwrap();
        worst_w = worst_w.max(v.w.residual(&x, &v.est.mu));

        for h in [n.div_ceil(2), (n + d + 1) / 2, (3 * n) / 4, n] {
            let r = mcd(&x, McdOptions { h: Some(h), n_starts: 50 }, key).unwrap();
            worst_w = worst_w.max(r.w.residual(&x, &r.est.mu));
            mcd_monotone &= r.monotone && r.log_det_trace.windows(2).all(|p| p[1] <= p[0] + 1e-12);
            for w in r.w.scaled().into_iter().filter(|w| *w > 0.0) {
                weight_range = (weight_range.0.min(w), weight_range.1.max(w));
                weights_ok &= (1.0 - 1e-12..=2.0 + 1e-12).contains(&w);
            }
        }
    }
    checks.push(Check::new("weighted_mean_residual", worst_w < 1e-8, format!("max {worst_w:.2e} (M, S, MVE, MCD)")));
    checks.push(Check::new("s_constraint_residual", worst_s < 1e-8, format!("max {worst_s:.2e}")));
    checks.push(Check::new("mcd_cstep_monotone", mcd_monotone, "determinant trace nonincreasing on every run"));
    checks.push(Check::new(
        "mcd_scaled_weights_in_1_2",
        weights_ok,
        format!("nonzero scaled weights span [{:.3}, {:.3}]", weight_range.0, weight_range.1),
    ));
    checks
}

/// Average estimation error on clean `N(0, I₂)` samples at `n`.
pub fn mean_error(est: LocationEstimator, n: usize, reps: usize) -> f64 {
    let model = EllipticalModel::standard(2);
    let total: f64 = (0..reps)
        .map(|r| {
            let key = StreamKey::new(9000 + r as u64);
            let x = sample_clean(&model, n, key);
            est.locate(&x, key.child(1)).unwrap().norm()
        })
        .sum();
    total / reps as f64
}

pub fn all_estimator_properties() -> Vec<Check> {
    let mut checks = weighted_mean_and_constraints();
    checks.extend(affine_equivariance(10));
    checks.push(coord_median_witness());
    checks
}
