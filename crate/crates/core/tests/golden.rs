//! Frozen output of a small seeded experiment. Regenerate with
//! `SELCI_UPDATE_GOLDEN=1 cargo test --test golden` after an intended
//! numerical change.

use std::path::PathBuf;

use selci::dgp::Setting;
use selci::harness::{run_experiment, ExperimentConfig, ExperimentPaths};

const FILES: [&str; 4] = ["reps.csv", "intervals.csv", "coverage.csv", "amse.csv"];

#[test]
fn seeded_run_matches_golden_files() {
    let cfg = ExperimentConfig { b: 20, alpha: 0.2, ..ExperimentConfig::new(Setting::Lai, 120, 60, 5, 2024) };
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, 1, Some(&ExperimentPaths { dir: dir.path().to_path_buf() })).unwrap();
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("SELCI_UPDATE_GOLDEN").is_some();
    for f in FILES {
        let got = std::fs::read_to_string(dir.path().join(f)).unwrap();
        if update {
            std::fs::write(golden.join(f), &got).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(golden.join(f)).unwrap_or_else(|_| panic!("missing golden file {f}"));
        assert_eq!(got, want, "{f} differs from the golden copy");
    }
}
