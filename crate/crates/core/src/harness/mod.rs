//! Monte-Carlo experiments: replications, persisted records, metrics and tables.
//!
//! Replication `l` draws its dataset and bootstrap streams from
//! `derive_seed(master, l)` alone, so results do not depend on the worker
//! count or on scheduling. Records are appended as replications finish and
//! rewritten in replication order at the end; aggregation is a pure pass over
//! the sorted records.

mod config;
mod metrics;
mod record;
mod run;
mod tables;

pub use config::{resolve_workers, AmseForm, ExperimentConfig, WORKERS_ENV};
pub use metrics::{aggregate, GroupMetrics, MethodMetrics, MetricsReport, GROUPS};
pub use record::{read_records, write_records, IntervalRecord, RecordSet, RepRecord, RepStatus};
pub use run::{run_experiment, run_replication, ExperimentOutcome, ExperimentPaths};
pub use tables::{amse_csv, coverage_csv, coverage_markdown, emit_tables};
