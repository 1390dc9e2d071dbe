//! CSV and JSON files read and written by the command-line tool.
//!
//! Datasets are CSV with header `y,x1,...,xp`. Generated datasets carry a
//! JSON sidecar next to the CSV (same stem, `.json` extension). Interval
//! tables use 1-based column indices to match the `x1..xp` naming.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dgp::{CoefVector, Dataset, DatasetMeta, Setting};
use crate::error::{Error, Result};
use crate::inference::{format_flags, parse_flags, IntervalReport, Method};

fn parse_error(what: &str, detail: impl Into<String>) -> Error {
    Error::Parse { what: what.into(), detail: detail.into() }
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| parse_error(what, format!("not a number: {field:?}")))
}

/// Writes `ds` as CSV. Values use the shortest round-trip representation.
pub fn write_dataset<W: Write>(writer: W, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let p = ds.p();
    let mut header = Vec::with_capacity(p + 1);
    header.push("y".to_string());
    header.extend((1..=p).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(p + 1);
    for t in 0..ds.n() {
        row.clear();
        row.push(ds.y[t].to_string());
        row.extend((0..p).map(|j| ds.x[(t, j)].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset`]. The first column is the
/// response; every other column is a predictor.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let width = r.headers()?.len();
    if width < 2 {
        return Err(parse_error("dataset", "need a response column and at least one predictor"));
    }
    let mut y = Vec::new();
    let mut cols: Vec<f64> = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(parse_error(
                "dataset",
                format!("row {} has {} fields, expected {width}", line + 1, record.len()),
            ));
        }
        y.push(parse_f64(&record[0], "dataset")?);
        for field in record.iter().skip(1) {
            cols.push(parse_f64(field, "dataset")?);
        }
    }
    let n = y.len();
    let x = DMatrix::from_row_slice(n, width - 1, &cols);
    Dataset::new(x, DVector::from_vec(y))
}

pub fn write_dataset_file(path: &Path, ds: &Dataset) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), ds)
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    read_dataset(std::io::BufReader::new(File::open(path)?))
}

/// Metadata written alongside a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub setting: Setting,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub beta: Vec<f64>,
}

impl Sidecar {
    pub fn from_dataset(ds: &Dataset) -> Option<Self> {
        Some(Self {
            setting: ds.meta.setting?,
            seed: ds.meta.seed?,
            n: ds.n(),
            p: ds.p(),
            beta: ds.truth.as_ref()?.values.clone(),
        })
    }

    /// Attaches the recorded truth and metadata to `ds`.
    pub fn apply(&self, ds: &mut Dataset) -> Result<()> {
        if self.beta.len() != ds.p() {
            return Err(Error::Dimension(format!(
                "sidecar beta has length {}, dataset has p = {}",
                self.beta.len(),
                ds.p()
            )));
        }
        ds.truth = Some(CoefVector::new(self.beta.clone()));
        ds.meta = DatasetMeta { setting: Some(self.setting), seed: Some(self.seed) };
        Ok(())
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, sidecar)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

/// One row of an interval table.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRow {
    /// 1-based column index.
    pub j: usize,
    pub method: Method,
    pub lower: f64,
    pub upper: f64,
    /// 1-based position of `j` in the selection order.
    pub selected_order: usize,
    pub flags: String,
}

pub const INTERVAL_HEADER: [&str; 6] = ["j", "method", "lower", "upper", "selected_order", "flags"];

/// Rows for `reports`, with selection positions taken from `order`.
pub fn interval_rows(reports: &[IntervalReport], order: &[usize]) -> Vec<IntervalRow> {
    reports
        .iter()
        .map(|r| IntervalRow {
            j: r.j + 1,
            method: r.method,
            lower: r.lower,
            upper: r.upper,
            selected_order: order.iter().position(|&k| k == r.j).map_or(0, |k| k + 1),
            flags: format_flags(&r.flags),
        })
        .collect()
}

pub fn write_intervals<W: Write>(writer: W, rows: &[IntervalRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(INTERVAL_HEADER)?;
    for r in rows {
        w.write_record([
            r.j.to_string(),
            r.method.name().to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.selected_order.to_string(),
            r.flags.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_intervals<R: Read>(reader: R) -> Result<Vec<IntervalRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != INTERVAL_HEADER {
        return Err(parse_error("interval table", format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        parse_flags(&record[5])?;
        rows.push(IntervalRow {
            j: record[0].parse().map_err(|_| parse_error("interval table", "bad column index"))?,
            method: record[1].parse()?,
            lower: parse_f64(&record[2], "interval table")?,
            upper: parse_f64(&record[3], "interval table")?,
            selected_order: record[4].parse().map_err(|_| parse_error("interval table", "bad selection order"))?,
            flags: record[5].to_string(),
        });
    }
    Ok(rows)
}
