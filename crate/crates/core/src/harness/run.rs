use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{aggregate, MetricsReport};
use super::record::{read_records, write_records, Appender, IntervalRecord, RecordSet, RepRecord, RepStatus};
use super::tables::emit_tables;
use crate::dgp::{generate, make_beta, DgpConfig};
use crate::error::{invalid, Error, Result};
use crate::pipeline::compute_intervals;
use crate::rng::derive_seed;

const CONFIG_FILE: &str = "config.json";

/// Runs one replication. Failures, including panics, are recorded in the
/// returned row rather than propagated.
pub fn run_replication(cfg: &ExperimentConfig, rep: usize) -> (RepRecord, Vec<IntervalRecord>) {
    let failed = |message: String| {
        let record =
            RepRecord { rep, status: RepStatus::Failed, k_hat: 0, selected: vec![], sq_error: f64::NAN, message };
        (record, Vec::new())
    };
    match catch_unwind(AssertUnwindSafe(|| try_replication(cfg, rep))) {
        Ok(Ok(out)) => out,
        Ok(Err(e)) => failed(e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            failed(format!("panic: {msg}"))
        }
    }
}

fn try_replication(cfg: &ExperimentConfig, rep: usize) -> Result<(RepRecord, Vec<IntervalRecord>)> {
    let seed = derive_seed(cfg.seed, rep as u64);
    let beta = make_beta(cfg.p)?;
    let ds = generate(&DgpConfig::new(cfg.setting, cfg.n, cfg.p, seed), &beta)?;
    let analysis = compute_intervals(&ds, &cfg.ci_options(seed))?;
    let selected = analysis.selection.j_hat.clone();
    let (sq_error, status) = match &analysis.beta_tilde {
        Some(bt) => {
            let err = selected.iter().zip(bt.iter()).map(|(&j, b)| (b - beta.values[j]).powi(2)).sum::<f64>();
            let status = if bt.iter().all(|&b| b == 0.0) { RepStatus::Degenerate } else { RepStatus::Ok };
            (err, status)
        }
        None => (f64::NAN, RepStatus::Ok),
    };
    let intervals = analysis
        .reports
        .iter()
        .map(|r| IntervalRecord {
            rep,
            j: r.j,
            beta: beta.values[r.j],
            method: r.method,
            lower: r.lower,
            upper: r.upper,
            flags: r.flags.clone(),
        })
        .collect();
    let record = RepRecord { rep, status, k_hat: analysis.k_hat, selected, sq_error, message: String::new() };
    Ok((record, intervals))
}

/// Where an experiment persists its records and tables.
#[derive(Debug, Clone)]
pub struct ExperimentPaths {
    pub dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: RecordSet,
    pub report: MetricsReport,
    /// Replications computed by this call.
    pub ran: usize,
    /// Replications taken from existing records.
    pub resumed: usize,
    pub tables: Vec<PathBuf>,
}

/// Checks that records in `dir` were produced by a compatible configuration
/// and stores `cfg` there. Only the replication count may differ.
fn check_config(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let path = dir.join(CONFIG_FILE);
    if let Ok(text) = std::fs::read_to_string(&path) {
        let old: ExperimentConfig = serde_json::from_str(&text)?;
        if (ExperimentConfig { reps: cfg.reps, ..old }) != *cfg {
            return invalid(format!("{} holds records from a different configuration", dir.display()));
        }
    }
    std::fs::write(&path, serde_json::to_string_pretty(cfg)? + "\n")?;
    Ok(())
}

/// Runs all replications of `cfg` on `workers` threads.
///
/// With `paths`, existing records are reused, new replications are appended
/// as they finish, and the sorted records and tables are written at the end.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    workers: usize,
    paths: Option<&ExperimentPaths>,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let mut records = RecordSet::default();
    let mut appender = None;
    if let Some(paths) = paths {
        std::fs::create_dir_all(&paths.dir)?;
        check_config(&paths.dir, cfg)?;
        records = read_records(&paths.dir)?;
        records.normalize();
        records.reps.retain(|r| r.rep < cfg.reps);
        records.intervals.retain(|r| r.rep < cfg.reps);
        write_records(&paths.dir, &records)?;
        appender = Some(Mutex::new(Appender::open(&paths.dir)?));
    }
    let resumed = records.reps.len();
    let missing: Vec<usize> = {
        let done: std::collections::HashSet<usize> = records.reps.iter().map(|r| r.rep).collect();
        (0..cfg.reps).filter(|r| !done.contains(r)).collect()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let results: Vec<Result<(RepRecord, Vec<IntervalRecord>)>> = pool.install(|| {
        missing
            .par_iter()
            .map(|&rep| {
                let (record, intervals) = run_replication(cfg, rep);
                if let Some(app) = &appender {
                    app.lock().unwrap_or_else(|e| e.into_inner()).append(&record, &intervals)?;
                }
                Ok((record, intervals))
            })
            .collect()
    });
    for result in results {
        let (record, intervals) = result?;
        records.reps.push(record);
        records.intervals.extend(intervals);
    }
    records.normalize();

    let beta = make_beta(cfg.p)?;
    let report = aggregate(&records, &beta.values, &cfg.methods, cfg.amse_form);
    let mut tables = Vec::new();
    if let Some(paths) = paths {
        drop(appender);
        write_records(&paths.dir, &records)?;
        tables = emit_tables(&paths.dir, cfg, &report)?;
    }
    Ok(ExperimentOutcome { records, report, ran: missing.len(), resumed, tables })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::Setting;
    use crate::inference::Method;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            b: 10,
            methods: vec![Method::T, Method::Iv, Method::Hr],
            ..ExperimentConfig::new(Setting::Iid, 60, 20, 3, 11)
        }
    }

    #[test]
    fn replication_is_deterministic() {
        let cfg = small();
        let a = run_replication(&cfg, 1);
        let b = run_replication(&cfg, 1);
        assert_eq!(a.0.selected, b.0.selected);
        assert_eq!(a.1, b.1);
        assert_eq!(a.0.status, RepStatus::Ok);
        assert!(!a.1.is_empty());
    }

    #[test]
    fn resume_appends_only_missing_replications() {
        let dir = tempfile::tempdir().unwrap();
        let paths = ExperimentPaths { dir: dir.path().to_path_buf() };
        let cfg = small();
        let first = run_experiment(&ExperimentConfig { reps: 2, ..cfg.clone() }, 1, Some(&paths)).unwrap();
        assert_eq!((first.ran, first.resumed), (2, 0));
        let second = run_experiment(&cfg, 2, Some(&paths)).unwrap();
        assert_eq!((second.ran, second.resumed), (1, 2));
        let fresh = run_experiment(&cfg, 1, None).unwrap();
        assert_eq!(second.records, fresh.records);
        let other = ExperimentConfig { seed: 12, ..cfg };
        assert!(run_experiment(&other, 1, Some(&paths)).is_err());
    }
}
