//! Per-replication records and their CSV form.
//!
//! `reps.csv` holds one row per replication and `intervals.csv` one row per
//! (replication, selected column, method). Column indices are 1-based in the
//! files. A replication counts as complete once its `reps.csv` row exists.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inference::{format_flags, parse_flags, Flag, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RepStatus {
    Ok,
    /// Neither half agreed with the full-sample selection, so the combined
    /// estimate is identically zero.
    Degenerate,
    Failed,
}

impl fmt::Display for RepStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepStatus::Ok => "ok",
            RepStatus::Degenerate => "degenerate",
            RepStatus::Failed => "failed",
        })
    }
}

impl FromStr for RepStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(RepStatus::Ok),
            "degenerate" => Ok(RepStatus::Degenerate),
            "failed" => Ok(RepStatus::Failed),
            _ => Err(parse_error(format!("unknown status {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep: usize,
    pub status: RepStatus,
    pub k_hat: usize,
    /// Zero-based selected columns in selection order.
    pub selected: Vec<usize>,
    /// `‖β̃_Ĵ − β_Ĵ‖²`; NaN when the estimate is unavailable.
    pub sq_error: f64,
    pub message: String,
}

impl RepRecord {
    pub fn m(&self) -> usize {
        self.selected.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRecord {
    pub rep: usize,
    /// Zero-based column index.
    pub j: usize,
    pub beta: f64,
    pub method: Method,
    pub lower: f64,
    pub upper: f64,
    pub flags: Vec<Flag>,
}

impl IntervalRecord {
    pub fn is_valid(&self) -> bool {
        !self.flags.iter().any(|f| f.invalidates()) && !self.lower.is_nan() && !self.upper.is_nan()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordSet {
    pub reps: Vec<RepRecord>,
    pub intervals: Vec<IntervalRecord>,
}

impl RecordSet {
    /// Sorts into replication order and drops interval rows of replications
    /// without a completed row.
    pub fn normalize(&mut self) {
        self.reps.sort_by_key(|r| r.rep);
        self.reps.dedup_by_key(|r| r.rep);
        let done: std::collections::HashSet<usize> = self.reps.iter().map(|r| r.rep).collect();
        self.intervals.retain(|r| done.contains(&r.rep));
        self.intervals.sort_by_key(|r| (r.rep, r.j, r.method));
        self.intervals.dedup_by_key(|r| (r.rep, r.j, r.method));
    }
}

pub const REP_HEADER: [&str; 6] = ["rep", "status", "k_hat", "selected", "sq_error", "message"];
pub const INTERVAL_HEADER: [&str; 7] = ["rep", "j", "beta", "method", "lower", "upper", "flags"];

fn parse_error(detail: impl Into<String>) -> Error {
    Error::Parse { what: "record".into(), detail: detail.into() }
}

fn num<T: FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| parse_error(format!("bad number {s:?}")))
}

pub(crate) fn rep_row(r: &RepRecord) -> [String; 6] {
    let selected = r.selected.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join("|");
    [r.rep.to_string(), r.status.to_string(), r.k_hat.to_string(), selected, r.sq_error.to_string(), r.message.clone()]
}

pub(crate) fn interval_row(r: &IntervalRecord) -> [String; 7] {
    [
        r.rep.to_string(),
        (r.j + 1).to_string(),
        r.beta.to_string(),
        r.method.name().to_string(),
        r.lower.to_string(),
        r.upper.to_string(),
        format_flags(&r.flags),
    ]
}

fn parse_rep(rec: &csv::StringRecord) -> Result<RepRecord> {
    if rec.len() != REP_HEADER.len() {
        return Err(parse_error(format!("replication row has {} fields", rec.len())));
    }
    let selected = rec[3]
        .split('|')
        .filter(|s| !s.is_empty())
        .map(|s| num::<usize>(s).and_then(|j| j.checked_sub(1).ok_or_else(|| parse_error("column index 0"))))
        .collect::<Result<_>>()?;
    Ok(RepRecord {
        rep: num(&rec[0])?,
        status: rec[1].parse()?,
        k_hat: num(&rec[2])?,
        selected,
        sq_error: num(&rec[4])?,
        message: rec[5].to_string(),
    })
}

fn parse_interval(rec: &csv::StringRecord) -> Result<IntervalRecord> {
    if rec.len() != INTERVAL_HEADER.len() {
        return Err(parse_error(format!("interval row has {} fields", rec.len())));
    }
    Ok(IntervalRecord {
        rep: num(&rec[0])?,
        j: num::<usize>(&rec[1])?.checked_sub(1).ok_or_else(|| parse_error("column index 0"))?,
        beta: num(&rec[2])?,
        method: rec[3].parse()?,
        lower: num(&rec[4])?,
        upper: num(&rec[5])?,
        flags: parse_flags(&rec[6])?,
    })
}

fn read_rows<R: Read, T>(reader: R, header: &[&str], parse: fn(&csv::StringRecord) -> Result<T>) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    if r.headers()?.iter().ne(header.iter().copied()) {
        return Err(parse_error(format!("unexpected header, expected {}", header.join(","))));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        out.push(parse(&rec?)?);
    }
    Ok(out)
}

pub fn read_rep_records<R: Read>(reader: R) -> Result<Vec<RepRecord>> {
    read_rows(reader, &REP_HEADER, parse_rep)
}

pub fn read_interval_records<R: Read>(reader: R) -> Result<Vec<IntervalRecord>> {
    read_rows(reader, &INTERVAL_HEADER, parse_interval)
}

pub fn write_rep_records<W: Write>(writer: W, reps: &[RepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REP_HEADER)?;
    for r in reps {
        w.write_record(rep_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_interval_records<W: Write>(writer: W, rows: &[IntervalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(INTERVAL_HEADER)?;
    for r in rows {
        w.write_record(interval_row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `reps.csv` and `intervals.csv` from `dir`; missing files read as
/// empty.
pub fn read_records(dir: &Path) -> Result<RecordSet> {
    let open = |name: &str| -> Result<Option<BufReader<File>>> {
        match File::open(dir.join(name)) {
            Ok(f) => Ok(Some(BufReader::new(f))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let reps = open(REPS_FILE)?.map(read_rep_records).transpose()?.unwrap_or_default();
    let intervals = open(INTERVALS_FILE)?.map(read_interval_records).transpose()?.unwrap_or_default();
    Ok(RecordSet { reps, intervals })
}

/// Rewrites both record files from `set`.
pub fn write_records(dir: &Path, set: &RecordSet) -> Result<()> {
    write_rep_records(File::create(dir.join(REPS_FILE))?, &set.reps)?;
    write_interval_records(File::create(dir.join(INTERVALS_FILE))?, &set.intervals)
}

pub const REPS_FILE: &str = "reps.csv";
pub const INTERVALS_FILE: &str = "intervals.csv";

/// Appends finished replications to the record files as they complete.
pub(crate) struct Appender {
    reps: csv::Writer<File>,
    intervals: csv::Writer<File>,
}

impl Appender {
    pub fn open(dir: &Path) -> Result<Self> {
        fn open_one(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
            let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
            let file = OpenOptions::new().create(true).append(true).open(path)?;
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
            if fresh {
                w.write_record(header)?;
            }
            Ok(w)
        }
        Ok(Self {
            reps: open_one(&dir.join(REPS_FILE), &REP_HEADER)?,
            intervals: open_one(&dir.join(INTERVALS_FILE), &INTERVAL_HEADER)?,
        })
    }

    /// Interval rows are flushed before the replication row so that a
    /// replication is never marked complete with rows missing.
    pub fn append(&mut self, rep: &RepRecord, intervals: &[IntervalRecord]) -> Result<()> {
        for r in intervals {
            self.intervals.write_record(interval_row(r))?;
        }
        self.intervals.flush()?;
        self.reps.write_record(rep_row(rep))?;
        self.reps.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RecordSet {
        RecordSet {
            reps: vec![
                RepRecord {
                    rep: 1,
                    status: RepStatus::Ok,
                    k_hat: 1,
                    selected: vec![0, 4, 2],
                    sq_error: 0.012345678901234567,
                    message: String::new(),
                },
                RepRecord {
                    rep: 0,
                    status: RepStatus::Failed,
                    k_hat: 0,
                    selected: vec![],
                    sq_error: f64::NAN,
                    message: "singular gram, \"quoted\"".into(),
                },
            ],
            intervals: vec![
                IntervalRecord {
                    rep: 1,
                    j: 4,
                    beta: 0.2,
                    method: Method::Hr,
                    lower: -0.1 / 3.0,
                    upper: f64::INFINITY,
                    flags: vec![Flag::NonConverged],
                },
                IntervalRecord {
                    rep: 2,
                    j: 0,
                    beta: 0.6,
                    method: Method::T,
                    lower: 0.5,
                    upper: f64::INFINITY,
                    flags: vec![],
                },
            ],
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let set = sample();
        let dir = tempfile::tempdir().unwrap();
        write_records(dir.path(), &set).unwrap();
        let back = read_records(dir.path()).unwrap();
        assert_eq!(back.intervals, set.intervals);
        assert_eq!(back.reps[0], set.reps[0]);
        assert!(back.reps[1].sq_error.is_nan());
        assert_eq!(back.reps[1].message, set.reps[1].message);
    }

    #[test]
    fn normalize_drops_orphans_and_sorts() {
        let mut set = sample();
        set.normalize();
        assert_eq!(set.reps.iter().map(|r| r.rep).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(set.intervals.len(), 1);
    }

    #[test]
    fn appender_writes_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let set = sample();
        for _ in 0..2 {
            let mut a = Appender::open(dir.path()).unwrap();
            a.append(&set.reps[0], &set.intervals[..1]).unwrap();
        }
        let back = read_records(dir.path()).unwrap();
        assert_eq!(back.reps.len(), 2);
        assert_eq!(back.intervals.len(), 2);
        assert!(read_records(&dir.path().join("missing")).unwrap().reps.is_empty());
    }
}
