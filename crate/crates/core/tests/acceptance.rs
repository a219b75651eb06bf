//! Acceptance suite. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test --test acceptance -- --nocapture --test-threads 1` to see them.

mod common;

use std::time::Instant;

use nalgebra::DVector;
use opl_core::estimators::{LocationEstimator, McdOptions};
use opl_core::experiments::{
    bias_sweep, empirical_breakdown, epsilon0, ges_vs_dim, min_dim_majority_contaminated, propagation_demo, table1,
    BiasSweepConfig, BreakdownConfig, ExperimentReport, GesVsDimConfig, PropagationConfig, TABLE1_ROUNDED,
};
use opl_core::influence::{
    if_numeric, Functional, GesSearch, InfluenceContext, InfluenceResult, McConfig, ModelKind, NumericOptions,
};
use opl_core::numerics::EllipticalModel;

fn verdict(k: usize, title: &str, passed: bool, detail: &str) {
    println!("acceptance #{k:<2} {} {title}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "criterion {k} failed: {detail}");
}

fn assertion_checks(report: &ExperimentReport, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        match report.assertion(name) {
            Some(a) => {
                ok &= a.passed;
                parts.push(format!("{}={} ({})", a.name, if a.passed { "ok" } else { "FAILED" }, a.detail));
            }
            None => {
                ok = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    (ok, parts.join("; "))
}

fn ctx2(kind: ModelKind, r: f64, seed: u64) -> InfluenceContext {
    let model = EllipticalModel::equicorrelated(2, r).unwrap();
    let mc = McConfig { n_draws: 200_000, seed, batch: 4096 };
    InfluenceContext::s_estimator(model, 0.5, Functional::Multivariate, kind, mc).unwrap()
}

fn within_se(a: &InfluenceResult, b: &InfluenceResult, k: f64) -> bool {
    (0..a.value.len()).all(|j| {
        let se = a.stderr[j].hypot(b.stderr[j]);
        (a.value[j] - b.value[j]).abs() <= k * se + 1e-12 * (1.0 + a.value[j].abs())
    })
}

#[test]
fn c01_table1() {
    let start = Instant::now();
    let got: Vec<f64> = table1().into_iter().map(|(_, e)| (e * 100.0).round() / 100.0).collect();
    let secs = start.elapsed().as_secs_f64();
    let ok = got == TABLE1_ROUNDED && secs < 1.0;
    verdict(1, "breakdown-bound table", ok, &format!("{got:?} in {secs:.4}s"));
}

#[test]
fn c02_clean_case_thresholds() {
    let start = Instant::now();
    let d05 = min_dim_majority_contaminated(0.05).unwrap();
    let d01 = min_dim_majority_contaminated(0.01).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok = d05 == 14 && d01 == 69 && secs < 1.0;
    verdict(2, "clean-case thresholds", ok, &format!("eps=0.05 -> d={d05}, eps=0.01 -> d={d01} in {secs:.4}s"));
}

#[test]
fn c03_ficm_cell_count_law() {
    let cfg = PropagationConfig { n: 20_000, eps: 0.3, seed: 2024, ..PropagationConfig::default() };
    let report = propagation_demo(&cfg).unwrap();
    let (ok, detail) = assertion_checks(&report, &["cell_count_fractions"]);
    verdict(3, "FICM cell-count law", ok, &detail);
}

#[test]
fn c04_influence_derivative_consistency() {
    let points = [[0.5, 0.3], [1.0, -0.8], [1.5, 0.2], [-0.7, 1.9], [-1.8, -0.9]];
    let mut ok = true;
    let mut worst = Vec::new();
    for kind in [ModelKind::Fdcm, ModelKind::Ficm] {
        let ctx = ctx2(kind, 0.0, 1);
        let mut w = 0.0f64;
        for p in points {
            let z = DVector::from_row_slice(&p);
            let exact = ctx.evaluate(&z).unwrap();
            let num = if_numeric(&z, &ctx, &NumericOptions::default()).unwrap();
            let rel = (&num.value - &exact.value).norm() / exact.norm();
            ok &= exact.norm() > 0.0 && rel < 0.05;
            w = w.max(rel);
        }
        worst.push(format!("{} worst relative gap {w:.4}", kind.name()));
    }

    // coordinatewise M: the two models give the same influence function
    let model = EllipticalModel::equicorrelated(2, 0.5).unwrap();
    let mc = McConfig { n_draws: 200_000, seed: 4, batch: 4096 };
    let cw = InfluenceContext::s_estimator(model, 0.5, Functional::Coordinatewise, ModelKind::Fdcm, mc).unwrap();
    let cw_ficm = cw.with_kind(ModelKind::Ficm);
    let mut cw_ok = true;
    for p in points.iter().chain(&[[3.0, -1.0], [0.0, 5.0]]) {
        let z = DVector::from_row_slice(p);
        cw_ok &= within_se(&cw.evaluate(&z).unwrap(), &cw_ficm.evaluate(&z).unwrap(), 3.0);
    }
    worst.push(format!("coordinatewise fdcm = ficm within 3 stderr: {cw_ok}"));
    verdict(4, "influence derivative consistency", ok && cw_ok, &worst.join("; "));
}

#[test]
fn c05_psicm_averaging_identity() {
    // psicm from one draw set, fdcm and ficm from an independent one
    let a = ctx2(ModelKind::Psicm, 0.5, 10);
    let b = ctx2(ModelKind::Ficm, 0.5, 11);
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut n = 0;
    for z1 in [-3.0, -1.5, 0.0, 1.5, 3.0] {
        for z2 in [-2.0, -0.5, 0.5, 2.0] {
            let z = DVector::from_row_slice(&[z1, z2]);
            let ps = a.if_psicm(&z).unwrap();
            let fd = b.if_fdcm(&z).unwrap();
            let fi = b.if_ficm(&z).unwrap();
            let avg = InfluenceResult { z: z.clone(), value: (&fd.value + &fi.value) * 0.5, stderr: &fi.stderr * 0.5 };
            ok &= within_se(&ps, &avg, 3.0);
            for j in 0..2 {
                let se = ps.stderr[j].hypot(avg.stderr[j]);
                if se > 0.0 {
                    worst = worst.max((ps.value[j] - avg.value[j]).abs() / se);
                }
            }
            n += 1;
        }
    }
    verdict(5, "PSICM averaging identity", ok, &format!("{n} points, largest gap {worst:.2} combined stderr"));
}

#[test]
fn c06_ficm_persistence() {
    let ficm = ctx2(ModelKind::Ficm, 0.0, 5);
    let fdcm = ficm.with_kind(ModelKind::Fdcm);
    let c = ficm.rho().c;
    let norm = |ctx: &InfluenceContext, z: [f64; 2]| ctx.evaluate(&DVector::from_row_slice(&z)).unwrap().norm();

    let (lo, hi) = (norm(&ficm, [1e2, 0.0]), norm(&ficm, [1e3, 0.0]));
    let axis_ok = (hi - lo).abs() <= 0.01 * lo;
    let fdcm_zero = [c * 1.01, 10.0, 1e2, 1e3].iter().all(|&t| norm(&fdcm, [t, 0.0]) == 0.0);

    // off the axis the second cell keeps a fixed, nonzero influence
    let (lo1, hi1) = (norm(&ficm, [1e2, 1.0]), norm(&ficm, [1e3, 1.0]));
    let off_ok = lo1 > 0.01 && (hi1 - lo1).abs() <= 0.01 * lo1;
    let fdcm_off = norm(&fdcm, [1e2, 1.0]) == 0.0;

    verdict(
        6,
        "FICM persistence",
        axis_ok && fdcm_zero && off_ok && fdcm_off,
        &format!(
            "|IF_ficm(t e1)| = {lo:.4} at 1e2, {hi:.4} at 1e3; |IF_ficm(t, 1)| = {lo1:.4} at 1e2, {hi1:.4} at 1e3; \
             IF_fdcm vanishes beyond c = {c:.4}: {}",
            fdcm_zero && fdcm_off
        ),
    );
}

#[test]
fn c07_ges_ordering() {
    let cfg = GesVsDimConfig {
        d_grid: vec![1, 5, 10, 15],
        mc: McConfig { n_draws: 200_000, seed: 7, batch: 4096 },
        search: GesSearch { seed: 7, ..GesSearch::default() },
        svg: false,
        ..GesVsDimConfig::default()
    };
    let report = ges_vs_dim(&cfg).unwrap();
    let (ok, detail) = assertion_checks(
        &report,
        &["multivariate_ficm_above_fdcm", "coordinatewise_equal_across_models", "coordinatewise_flat_in_d"],
    );
    verdict(7, "GES ordering", ok, &detail);
}

#[test]
fn c08_fig4_behavior() {
    let cfg = BiasSweepConfig { seed: 8, svg: false, ..BiasSweepConfig::default() };
    assert_eq!((cfg.d, cfg.n, cfg.eps, cfg.replications), (15, 100, 0.15, 20));
    let report = bias_sweep(&cfg).unwrap();
    let (ok, detail) = assertion_checks(
        &report,
        &[
            "coord_median_below_1",
            "mcd_nondecreasing_beyond_10",
            "mve_nondecreasing_beyond_10",
            "mcd_above_5_at_100",
            "mve_above_5_at_100",
            "mean_bias_within_20pct_of_eps_t",
        ],
    );
    verdict(8, "bias curves", ok, &detail);
}

#[test]
fn c09_estimator_properties() {
    let checks = common::all_estimator_properties();
    let ok = common::report(&checks);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    verdict(
        9,
        "estimator property suite",
        ok,
        &format!("{} checks, failed: {:?}", checks.len(), failed),
    );
}

#[test]
fn c10_empirical_breakdown() {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2, 5, 10] {
        let cfg = BreakdownConfig {
            estimator: LocationEstimator::Mcd { n_starts: McdOptions::default().n_starts },
            d,
            seed: 10 + d as u64,
            svg: false,
            ..BreakdownConfig::default()
        };
        let bound = epsilon0(0.0, d).unwrap();
        let (res, _) = empirical_breakdown(&cfg).unwrap();
        let pass = res.eps_star_hat.is_some_and(|e| e <= bound + 0.02 + 1e-12);
        ok &= pass;
        parts.push(format!("d={d}: eps* = {:?} vs bound {bound:.4}", res.eps_star_hat));
    }
    verdict(10, "empirical breakdown vs bound", ok, &parts.join("; "));
}

#[test]
fn c11_determinism() {
    let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let runs: Vec<(&str, Box<dyn Fn() -> ExperimentReport + Sync>)> = vec![
        (
            "fig4",
            Box::new(|| {
                bias_sweep(&BiasSweepConfig {
                    d: 5,
                    n: 60,
                    t_grid: vec![0.0, 10.0, 50.0],
                    estimators: vec![
                        LocationEstimator::Mean,
                        LocationEstimator::CoordMedian,
                        LocationEstimator::Mcd { n_starts: 50 },
                        LocationEstimator::Mve { n_trials: 50 },
                    ],
                    replications: 4,
                    seed: 3,
                    ..BiasSweepConfig::default()
                })
                .unwrap()
            }),
        ),
        (
            "fig2",
            Box::new(|| {
                ges_vs_dim(&GesVsDimConfig {
                    d_grid: vec![1, 3],
                    mc: McConfig { n_draws: 20_000, seed: 3, batch: 4096 },
                    search: GesSearch { n_random: 4, coarse_draws: 5_000, seed: 3, ..GesSearch::default() },
                    ..GesVsDimConfig::default()
                })
                .unwrap()
            }),
        ),
        ("fig3", Box::new(|| propagation_demo(&PropagationConfig { n: 20_000, seed: 3, ..Default::default() }).unwrap())),
        (
            "breakdown",
            Box::new(|| {
                empirical_breakdown(&BreakdownConfig {
                    d: 3,
                    n: 60,
                    estimator: LocationEstimator::Mcd { n_starts: 50 },
                    eps_grid: vec![0.1, 0.2, 0.3],
                    replications: 4,
                    seed: 3,
                    ..BreakdownConfig::default()
                })
                .unwrap()
                .1
            }),
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, f) in &runs {
        let one = pool(1).install(|| f()).results.to_csv().unwrap();
        let eight = pool(8).install(|| f()).results.to_csv().unwrap();
        let again = pool(1).install(|| f()).results.to_csv().unwrap();
        let same = one == eight && one == again;
        ok &= same;
        parts.push(format!("{name}: {}", if same { "identical" } else { "DIFFERENT" }));
    }
    verdict(11, "determinism across thread counts", ok, &parts.join("; "));
}
