//! CSV and Markdown tables: rows `{CR, mLB, sLB} × method` under an `NS`
//! row, columns `0.6, 0.4, 0.2, 0.1, Overall`; plus a one-row AMSE table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{AmseForm, ExperimentConfig};
use super::metrics::{MetricsReport, GROUPS};

const COVERAGE_HEADER: [&str; 7] = ["metric", "method", "0.6", "0.4", "0.2", "0.1", "Overall"];
const AMSE_HEADER: [&str; 9] = ["setting", "n", "p", "reps", "amse", "form", "amse_reps", "degenerate", "failed"];

fn fmt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "NA".into(),
    }
}

/// Body rows of the coverage table; empty when there are no replications.
fn coverage_rows(report: &MetricsReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    if report.reps == 0 {
        return rows;
    }
    let mut ns = vec!["NS".to_string(), String::new()];
    ns.extend(report.ns.iter().take(GROUPS.len()).map(|v| fmt(*v)));
    ns.push(String::new());
    rows.push(ns);
    type Pick = fn(&super::metrics::GroupMetrics) -> Option<f64>;
    let metrics: [(&str, Pick); 3] = [("CR", |g| g.cr), ("mLB", |g| g.mlb), ("sLB", |g| g.slb)];
    for (name, pick) in metrics {
        for m in &report.methods {
            let mut row = vec![name.to_string(), m.method.label().to_string()];
            row.extend(GROUPS.iter().map(|&t| fmt(m.group(t).and_then(pick))));
            row.push(if name == "CR" { fmt(m.overall_cr) } else { String::new() });
            rows.push(row);
        }
    }
    rows
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn to_markdown(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| {} |", header.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

pub fn coverage_csv(report: &MetricsReport) -> String {
    to_csv(&COVERAGE_HEADER, &coverage_rows(report))
}

pub fn coverage_markdown(report: &MetricsReport) -> String {
    to_markdown(&COVERAGE_HEADER, &coverage_rows(report))
}

fn amse_rows(cfg: &ExperimentConfig, report: &MetricsReport) -> Vec<Vec<String>> {
    if report.reps == 0 {
        return Vec::new();
    }
    let form = match report.amse_form {
        AmseForm::Rmse => "rmse",
        AmseForm::Literal => "literal",
    };
    vec![vec![
        cfg.setting.to_string(),
        cfg.n.to_string(),
        cfg.p.to_string(),
        report.reps.to_string(),
        fmt(report.amse),
        form.to_string(),
        report.amse_reps.to_string(),
        report.degenerate.to_string(),
        report.failed.to_string(),
    ]]
}

pub fn amse_csv(cfg: &ExperimentConfig, report: &MetricsReport) -> String {
    to_csv(&AMSE_HEADER, &amse_rows(cfg, report))
}

/// Writes `coverage.csv`, `coverage.md`, `amse.csv` and `amse.md` into `dir`.
pub fn emit_tables(dir: &Path, cfg: &ExperimentConfig, report: &MetricsReport) -> crate::Result<Vec<PathBuf>> {
    let amse = amse_rows(cfg, report);
    let files = [
        ("coverage.csv", coverage_csv(report)),
        ("coverage.md", coverage_markdown(report)),
        ("amse.csv", to_csv(&AMSE_HEADER, &amse)),
        ("amse.md", to_markdown(&AMSE_HEADER, &amse)),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        out.push(path);
    }
    Ok(out)
}
