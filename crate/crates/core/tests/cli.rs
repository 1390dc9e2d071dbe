use std::path::Path;
use std::process::{Command, Output};

use selci::io;

fn selci(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selci")).args(args).env_remove("SELCI_WORKERS").output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dgp_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lai.csv");
    let out = selci(&["dgp", "--setting", "lai", "--n", "80", "--p", "30", "--seed", "4", "--out", path(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 31);
    assert_eq!((header[0], header[1], header[30]), ("y", "x1", "x30"));
    assert_eq!(text.lines().count(), 81);

    let sidecar = io::read_sidecar(&io::sidecar_path(&csv)).unwrap();
    assert_eq!((sidecar.seed, sidecar.n, sidecar.p, sidecar.setting.to_string().as_str()), (4, 80, 30, "lai"));
    assert_eq!(sidecar.beta.len(), 30);
    assert_eq!(sidecar.beta.iter().filter(|b| **b != 0.0).count(), 10);

    // Same seed, same bytes.
    let again = dir.path().join("again.csv");
    selci(&["dgp", "--setting", "lai", "--n", "80", "--p", "30", "--seed", "4", "--out", path(&again)]);
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn ci_reads_dataset_and_writes_interval_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    selci(&["dgp", "--setting", "iid", "--n", "150", "--p", "40", "--seed", "9", "--out", path(&csv)]);
    let table = dir.path().join("ci.csv");
    let out = selci(&[
        "ci",
        "--in",
        path(&csv),
        "--alpha",
        "0.1",
        "--method",
        "t,iv,hr",
        "--side",
        "two",
        "--B",
        "20",
        "--seed",
        "3",
        "--out",
        path(&table),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().next().unwrap(), "j,method,lower,upper,selected_order,flags");
    let rows = io::read_intervals(text.as_bytes()).unwrap();
    assert!(!rows.is_empty() && rows.len().is_multiple_of(3));
    for r in &rows {
        assert!((1..=40).contains(&r.j));
        assert!(r.selected_order >= 1);
        if r.flags.is_empty() {
            assert!(r.lower <= r.upper && r.upper.is_finite());
        }
    }
    // Standard output carries the same table.
    let out = selci(&[
        "ci",
        "--in",
        path(&csv),
        "--alpha",
        "0.1",
        "--method",
        "t,iv,hr",
        "--side",
        "two",
        "--B",
        "20",
        "--seed",
        "3",
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
}

#[test]
fn invalid_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = selci(&["ci", "--in", path(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let csv = dir.path().join("d.csv");
    selci(&["dgp", "--setting", "iid", "--n", "60", "--p", "20", "--out", path(&csv)]);
    let out = selci(&["ci", "--in", path(&csv), "--alpha", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = selci(&["ci", "--in", path(&csv), "--method", "xyz"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!selci(&["dgp", "--setting", "nope", "--n", "60", "--p", "20", "--out", path(&csv)]).status.success());
}

#[test]
fn simulate_output_does_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: Option<&str>, env: Option<&str>| {
        let out_dir = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_selci"));
        cmd.args(["simulate", "--setting", "ar", "--n", "80", "--p", "30", "--reps", "4", "--B", "10"]);
        cmd.args(["--alpha", "0.2", "--methods", "t,iv,ps,hr", "--seed", "5", "--out", path(&out_dir)]);
        if let Some(w) = workers {
            cmd.args(["--workers", w]);
        }
        cmd.env_remove("SELCI_WORKERS");
        if let Some(e) = env {
            cmd.env("SELCI_WORKERS", e);
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (out_dir, out)
    };
    let (a, out_a) = run("a", Some("1"), None);
    let (b, out_b) = run("b", Some("1"), Some("3"));
    assert!(String::from_utf8_lossy(&out_b.stderr).contains("3 worker(s)"));
    assert_eq!(out_a.stdout, out_b.stdout);
    assert!(String::from_utf8_lossy(&out_a.stdout).contains("| CR | HR |"));
    for f in ["coverage.csv", "coverage.md", "amse.csv", "amse.md", "reps.csv", "intervals.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    // Rerunning into a finished directory only resumes.
    let (_, again) = run("a", Some("2"), None);
    assert!(String::from_utf8_lossy(&again.stderr).contains("0 new, 4 resumed"));
    assert_eq!(again.stdout, out_a.stdout);
}
