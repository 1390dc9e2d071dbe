use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use selci::dgp::{generate, make_beta, DgpConfig, Setting};
use selci::harness::{self, AmseForm, ExperimentConfig, ExperimentPaths};
use selci::inference::{parse_methods, CovMode, Method, Side};
use selci::io;
use selci::pipeline::{compute_intervals, CiOptions};
use selci::resample::{EpsDesign, HalfSelection};

#[derive(Parser)]
#[command(name = "selci", version, about = "Confidence intervals after greedy variable selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset and write it as CSV with a JSON sidecar.
    Dgp(DgpArgs),
    /// Compute intervals for the selected columns of a CSV dataset.
    Ci(CiArgs),
    /// Run a Monte-Carlo experiment and write records and tables.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct DgpArgs {
    #[arg(long)]
    setting: Setting,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV path; the sidecar is written next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CiArgs {
    /// CSV with header y,x1,...,xp.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// One method or a comma-separated list of t, iv, ps, hr.
    #[arg(long, default_value = "hr")]
    method: String,
    #[arg(long, default_value = "one")]
    side: Side,
    /// Bartlett lag of the variance estimate.
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long = "B", default_value_t = 50)]
    b: usize,
    #[arg(long, default_value_t = 5)]
    kmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise scale for the ps method; estimated from the selected fit if absent.
    #[arg(long)]
    sigma: Option<f64>,
    /// Regress each half's residual on its own selection instead of the
    /// other half's.
    #[arg(long)]
    same_side_eps: bool,
    /// Let each half choose its own model size by HDBIC.
    #[arg(long)]
    half_hdbic: bool,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    setting: Setting,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long = "B", default_value_t = 50)]
    b: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value = "t,iv,ps,hr")]
    methods: String,
    #[arg(long, default_value = "one")]
    side: Side,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, default_value_t = 5)]
    kmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; overridden by SELCI_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
    /// Known noise scale for the ps method; the setting's error sd if absent.
    #[arg(long)]
    sigma: Option<f64>,
    /// Report the AMSE with the norm left unsquared under the root.
    #[arg(long)]
    literal_amse: bool,
    #[arg(long)]
    same_side_eps: bool,
    /// Let each half choose its own model size by HDBIC.
    #[arg(long)]
    half_hdbic: bool,
    #[arg(long)]
    out: PathBuf,
}

fn eps_design(same_side: bool) -> EpsDesign {
    if same_side {
        EpsDesign::SameSide
    } else {
        EpsDesign::CrossIndexed
    }
}

fn half_selection(hdbic: bool) -> HalfSelection {
    if hdbic {
        HalfSelection::Hdbic
    } else {
        HalfSelection::MatchFull
    }
}

fn run_dgp(a: DgpArgs) -> selci::Result<ExitCode> {
    let beta = make_beta(a.p)?;
    let ds = generate(&DgpConfig::new(a.setting, a.n, a.p, a.seed), &beta)?;
    io::write_dataset_file(&a.out, &ds)?;
    let sidecar = io::Sidecar::from_dataset(&ds).expect("generated datasets carry metadata");
    io::write_sidecar(&io::sidecar_path(&a.out), &sidecar)?;
    Ok(ExitCode::SUCCESS)
}

fn run_ci(a: CiArgs) -> selci::Result<ExitCode> {
    let ds = io::read_dataset_file(&a.input)?;
    let methods: Vec<Method> = parse_methods(&a.method)?;
    let opts = CiOptions {
        alpha: a.alpha,
        side: a.side,
        methods,
        cov_mode: CovMode::Hac { q: a.q },
        b: a.b,
        kmax: a.kmax,
        seed: a.seed,
        eps_design: eps_design(a.same_side_eps),
        half_selection: half_selection(a.half_hdbic),
        ps_sigma: a.sigma,
        ..Default::default()
    };
    let analysis = compute_intervals(&ds, &opts)?;
    let rows = io::interval_rows(&analysis.reports, &analysis.selection.j_hat);
    match &a.out {
        Some(path) => io::write_intervals(std::io::BufWriter::new(std::fs::File::create(path)?), &rows)?,
        None => io::write_intervals(std::io::stdout().lock(), &rows)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn run_simulate(a: SimulateArgs) -> selci::Result<ExitCode> {
    let cfg = ExperimentConfig {
        b: a.b,
        alpha: a.alpha,
        side: a.side,
        kmax: a.kmax,
        q: a.q,
        methods: parse_methods(&a.methods)?,
        eps_design: eps_design(a.same_side_eps),
        half_selection: half_selection(a.half_hdbic),
        ps_sigma: a.sigma,
        amse_form: if a.literal_amse { AmseForm::Literal } else { AmseForm::Rmse },
        ..ExperimentConfig::new(a.setting, a.n, a.p, a.reps, a.seed)
    };
    let workers = harness::resolve_workers(a.workers);
    let outcome = harness::run_experiment(&cfg, workers, Some(&ExperimentPaths { dir: a.out.clone() }))?;
    print!("{}", harness::coverage_markdown(&outcome.report));
    println!();
    print!("{}", harness::amse_csv(&cfg, &outcome.report));
    eprintln!(
        "{} replications ({} new, {} resumed; {} degenerate, {} failed) on {workers} worker(s); tables in {}",
        outcome.records.reps.len(),
        outcome.ran,
        outcome.resumed,
        outcome.report.degenerate,
        outcome.report.failed,
        a.out.display()
    );
    // Failed replications are recorded individually; only missing ones are
    // an error.
    let complete = outcome.records.reps.len() == cfg.reps;
    Ok(if complete { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dgp(a) => run_dgp(a),
        Command::Ci(a) => run_ci(a),
        Command::Simulate(a) => run_simulate(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
