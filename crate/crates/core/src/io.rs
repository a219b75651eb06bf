//! CSV and JSON serialization of datasets, estimates and result tables.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A rectangular table of pre-formatted cells.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    /// Index of a named column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Shortest round-trip decimal form; identical values always print identically.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

/// Path of the JSON sidecar next to a data file: `data.csv` → `data.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes rows of `x` under `x1..xd`, followed by `b1..bd` when indicators
/// are given.
pub fn write_dataset(path: &Path, x: &DMatrix<f64>, b: Option<&DMatrix<u8>>) -> Result<()> {
    let (n, d) = x.shape();
    let mut header: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    if let Some(b) = b {
        if b.shape() != (n, d) {
            return Err(Error::DimensionMismatch { expected: d, found: b.ncols() });
        }
        header.extend((1..=d).map(|j| format!("b{j}")));
    }
    let mut t = Table::new(header);
    for i in 0..n {
        let mut row: Vec<String> = (0..d).map(|j| fmt_f64(x[(i, j)])).collect();
        if let Some(b) = b {
            row.extend((0..d).map(|j| b[(i, j)].to_string()));
        }
        t.push(row);
    }
    t.write(path)
}

/// A dataset read back from CSV: `x*` columns and, when present, `b*`
/// indicator columns. Other columns are ignored.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub b: Option<DMatrix<u8>>,
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.clone();
    let pick = |prefix: char| -> Vec<usize> {
        let mut cols: Vec<(usize, usize)> = header
            .iter()
            .enumerate()
            .filter_map(|(i, h)| {
                h.strip_prefix(prefix).and_then(|rest| rest.parse::<usize>().ok()).map(|k| (k, i))
            })
            .collect();
        cols.sort_unstable();
        cols.into_iter().map(|(_, i)| i).collect()
    };
    let xs = pick('x');
    let bs = pick('b');
    if xs.is_empty() {
        return Err(Error::Parse(format!("{}: no x1..xd columns", path.display())));
    }
    let mut xv = Vec::new();
    let mut bv = Vec::new();
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        for &i in &xs {
            let s = rec.get(i).unwrap_or("");
            xv.push(s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {s:?}", n + 1)))?);
        }
        for &i in &bs {
            let s = rec.get(i).unwrap_or("");
            bv.push(s.trim().parse::<u8>().map_err(|_| Error::Parse(format!("row {}: bad indicator {s:?}", n + 1)))?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let x = DMatrix::from_row_slice(n, xs.len(), &xv);
    let b = (!bs.is_empty()).then(|| DMatrix::from_row_slice(n, bs.len(), &bv));
    Ok(Dataset { x, b })
}

/// Serialized location/scatter estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub estimator: String,
    pub mu: Vec<f64>,
    pub sigma: Option<Vec<Vec<f64>>>,
    pub objective: f64,
    pub iterations: usize,
    pub seed: u64,
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Influence surface table with columns `z1..zd, if1..ifd, se1..sed`.
pub fn if_surface_table(results: &[crate::influence::InfluenceResult]) -> Table {
    let d = results.first().map_or(0, |r| r.z.len());
    let header = (1..=d)
        .map(|j| format!("z{j}"))
        .chain((1..=d).map(|j| format!("if{j}")))
        .chain((1..=d).map(|j| format!("se{j}")));
    let mut t = Table::new(header);
    for r in results {
        let row = [&r.z, &r.value, &r.stderr].iter().flat_map(|v: &&DVector<f64>| v.iter().map(|x| fmt_f64(*x))).collect();
        t.push(row);
    }
    t
}
