use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{line_chart, Assertion, ExperimentReport, Series};
use crate::influence::{ges, Functional, GesSearch, InfluenceContext, McConfig, ModelKind};
use crate::io::{fmt_f64, Table};
use crate::numerics::EllipticalModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GesVsDimConfig {
    pub d_grid: Vec<usize>,
    pub bp: f64,
    pub mc: McConfig,
    pub search: GesSearch,
    pub svg: bool,
}

impl Default for GesVsDimConfig {
    fn default() -> Self {
        GesVsDimConfig { d_grid: (1..=20).collect(), bp: 0.5, mc: McConfig::default(), search: GesSearch::default(), svg: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Point {
    d: usize,
    functional: Functional,
    kind: ModelKind,
    value: f64,
    se: f64,
}

fn functional_name(f: Functional) -> &'static str {
    match f {
        Functional::Multivariate => "multivariate_s",
        Functional::Coordinatewise => "coordinatewise_s",
    }
}

/// Gross-error sensitivity of the multivariate and coordinatewise
/// S-estimators of location under row-wise and cellwise contamination, as a
/// function of the dimension.
pub fn ges_vs_dim(cfg: &GesVsDimConfig) -> Result<ExperimentReport> {
    if cfg.d_grid.is_empty() || cfg.d_grid.iter().any(|&d| d == 0 || d > 20) {
        return Err(Error::invalid("dimension grid must be nonempty within [1, 20]"));
    }
    let mut points = Vec::new();
    for &d in &cfg.d_grid {
        for functional in [Functional::Multivariate, Functional::Coordinatewise] {
            let base = InfluenceContext::s_estimator(EllipticalModel::standard(d), cfg.bp, functional, ModelKind::Fdcm, cfg.mc)?;
            for kind in [ModelKind::Fdcm, ModelKind::Ficm] {
                let g = ges(&base.with_kind(kind), &cfg.search)?;
                points.push(Point { d, functional, kind, value: g.value, se: g.stderr });
            }
        }
    }

    let mut results = Table::new(["d", "estimator", "model_kind", "ges", "stderr"]);
    for p in &points {
        results.push(vec![
            p.d.to_string(),
            functional_name(p.functional).into(),
            p.kind.name().into(),
            fmt_f64(p.value),
            fmt_f64(p.se),
        ]);
    }
    let get = |d: usize, f: Functional, k: ModelKind| {
        points.iter().find(|p| p.d == d && p.functional == f && p.kind == k).copied().expect("all cells computed")
    };
    let close = |a: Point, b: Point| (a.value - b.value).abs() <= 3.0 * (a.se.powi(2) + b.se.powi(2)).sqrt() + 1e-6 * a.value.abs();

    let mut assertions = Vec::new();
    if cfg.d_grid.contains(&1) {
        let all: Vec<Point> = points.iter().filter(|p| p.d == 1).copied().collect();
        let ok = all.iter().all(|&p| close(p, all[0]));
        let vals: Vec<String> = all.iter().map(|p| format!("{:.5}", p.value)).collect();
        assertions.push(Assertion::new("d1_all_coincide", ok, vals.join(", ")));
    }
    let mut diffs = Vec::new();
    for &d in &cfg.d_grid {
        let a = get(d, Functional::Coordinatewise, ModelKind::Fdcm);
        let b = get(d, Functional::Coordinatewise, ModelKind::Ficm);
        if !close(a, b) {
            diffs.push(format!("d={d}: {:.4} vs {:.4}±{:.4}", a.value, b.value, b.se));
        }
    }
    assertions.push(Assertion::new(
        "coordinatewise_equal_across_models",
        diffs.is_empty(),
        if diffs.is_empty() { "all within 3 stderr".to_string() } else { diffs.join("; ") },
    ));
    let d_min = *cfg.d_grid.iter().min().expect("nonempty");
    let reference = get(d_min, Functional::Coordinatewise, ModelKind::Fdcm);
    let off: Vec<String> = points
        .iter()
        .filter(|p| p.functional == Functional::Coordinatewise && !close(**p, reference))
        .map(|p| format!("d={} {}: {:.4}", p.d, p.kind.name(), p.value))
        .collect();
    assertions.push(Assertion::new(
        "coordinatewise_flat_in_d",
        off.is_empty(),
        if off.is_empty() {
            format!("all equal to {:.4}", reference.value)
        } else {
            format!("reference d={d_min}: {:.4}; differing: {}", reference.value, off.join("; "))
        },
    ));
    let mut gaps = Vec::new();
    let mut ok = true;
    for &d in cfg.d_grid.iter().filter(|&&d| d >= 5) {
        let fd = get(d, Functional::Multivariate, ModelKind::Fdcm);
        let fi = get(d, Functional::Multivariate, ModelKind::Ficm);
        ok &= fi.value - fd.value > 3.0 * (fi.se.powi(2) + fd.se.powi(2)).sqrt();
        gaps.push(format!("d={d}: ficm {:.4} vs fdcm {:.4}", fi.value, fd.value));
    }
    if !gaps.is_empty() {
        assertions.push(Assertion::new("multivariate_ficm_above_fdcm", ok, gaps.join("; ")));
    }

    let svg = cfg.svg.then(|| {
        let series: Vec<Series> = [Functional::Multivariate, Functional::Coordinatewise]
            .into_iter()
            .flat_map(|f| [ModelKind::Fdcm, ModelKind::Ficm].map(move |k| (f, k)))
            .map(|(f, k)| Series {
                label: format!("{} {}", functional_name(f), k.name()),
                points: cfg.d_grid.iter().map(|&d| (d as f64, get(d, f, k).value)).collect(),
            })
            .collect();
        line_chart("Gross-error sensitivity", "dimension d", "GES", &series)
    });
    Ok(ExperimentReport {
        name: "fig2".into(),
        config: serde_json::to_value(cfg)?,
        results,
        tables: Vec::new(),
        metrics: json!({ "points": points.len() }),
        assertions,
        svg,
    })
}
