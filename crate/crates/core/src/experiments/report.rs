use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::io::{write_json, Table};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Assertion { name: name.into(), passed, detail: detail.into() }
    }
}

/// Output of one experiment: the resolved configuration, the result table,
/// named auxiliary tables, summary metrics and pass/fail checks.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub config: Value,
    pub results: Table,
    pub tables: Vec<(String, Table)>,
    pub metrics: Value,
    pub assertions: Vec<Assertion>,
    pub svg: Option<String>,
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn summary(&self) -> Value {
        json!({
            "name": self.name,
            "passed": self.all_passed(),
            "assertions": self.assertions,
            "metrics": self.metrics,
        })
    }

    /// Writes `<out_dir>/<name>/{config.json, results.csv, summary.json}`,
    /// any auxiliary `<table>.csv`, and `plot.svg` when a chart was drawn.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let dir = write_config(out_dir, &self.name, &self.config)?;
        self.results.write(&dir.join("results.csv"))?;
        for (name, t) in &self.tables {
            t.write(&dir.join(format!("{name}.csv")))?;
        }
        write_json(&dir.join("summary.json"), &self.summary())?;
        if let Some(svg) = &self.svg {
            fs::write(dir.join("plot.svg"), svg)?;
        }
        Ok(dir)
    }
}

/// Creates `<out_dir>/<name>/` and writes `config.json` into it.
pub fn write_config(out_dir: &Path, name: &str, config: &Value) -> Result<PathBuf> {
    let dir = out_dir.join(name);
    fs::create_dir_all(&dir)?;
    write_json(&dir.join("config.json"), config)?;
    Ok(dir)
}

/// One polyline of a chart; `NaN` values break the line.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Minimal static SVG line chart.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 420.0, 70.0, 150.0, 40.0, 50.0);
    let finite = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    out += &format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n");
    out += &format!("<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", left + pw / 2.0, escape(title));
    out += &format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        out += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            sx(fx),
            top + ph + 16.0,
            tick(fx)
        );
        out += &format!("<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n", left - 6.0, sy(fy) + 4.0, tick(fy));
    }
    out += &format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2.0, h - 12.0, escape(x_label));
    out += &format!(
        "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
        top + ph / 2.0,
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut seg: Vec<String> = Vec::new();
        let flush = |seg: &mut Vec<String>, out: &mut String| {
            if seg.len() > 1 {
                *out += &format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                    seg.join(" ")
                );
            }
            seg.clear();
        };
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                seg.push(format!("{:.2},{:.2}", sx(x), sy(y)));
            } else {
                flush(&mut seg, &mut out);
            }
        }
        flush(&mut seg, &mut out);
        let ly = top + 14.0 + 18.0 * k as f64;
        out += &format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            w - right + 10.0,
            ly,
            w - right + 30.0
        );
        out += &format!("<text x=\"{}\" y=\"{}\">{}</text>\n", w - right + 36.0, ly + 4.0, escape(&s.label));
    }
    out += "</svg>\n";
    out
}

fn tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1e4) {
        format!("{}", (v * 100.0).round() / 100.0)
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
