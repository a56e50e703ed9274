//! `fj`: solve, diagnose and scan Friedkin-Johnsen problems and run
//! broadcasting-centrality campaigns, writing CSV/JSON/SVG files.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage error, 3 parse error,
//! 4 problem not well posed, 5 step cap reached.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fj_core::broadcasting::ClosenessVariant;

#[derive(Parser, Debug)]
#[command(name = "fj", version, about = "Friedkin-Johnsen dynamics, influence scans and broadcasting centralities")]
struct Cli {
    /// Output directory, created if absent.
    #[arg(long, global = true, env = "FJ_OUT_DIR", default_value = "fj-out")]
    out: PathBuf,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady state and well-posedness of a problem file.
    Solve(SolveArgs),
    /// Kick-off, germinated opinion and stabilization time of every node.
    Diagnose(DiagnoseArgs),
    /// All-vertex scan: U_inf, T, E and S_eps matrices.
    Scan(ScanArgs),
    /// Broadcasting and classical centralities for one susceptibility profile.
    Centrality(CentralityArgs),
    /// Monte Carlo campaign over random susceptibility profiles.
    Campaign(CampaignArgs),
    /// List the built-in datasets.
    Datasets,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Also write the Dirichlet spectrum (undirected random-walk graphs only).
    #[arg(long)]
    spectrum: bool,
    /// Also write dv*/ds_k for every interior node.
    #[arg(long)]
    sensitivity: bool,
}

#[derive(Args, Debug)]
struct StepArgs {
    /// Radius of the stabilization ball.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Largest number of simulated steps.
    #[arg(long, default_value_t = 1_000_000)]
    t_cap: u32,
    /// Write results and exit 0 even when the step cap was reached.
    #[arg(long)]
    allow_cap: bool,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    #[command(flatten)]
    steps: StepArgs,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Built-in dataset name.
    #[arg(long)]
    builtin: Option<String>,
    /// Edge list: "i j [w]" lines, 0-based ids, '#' comments.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Dense row-stochastic weight matrix as CSV.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct ProfileSource {
    /// Homogeneous baseline susceptibility.
    #[arg(long = "s")]
    s: Option<f64>,
    /// Baseline susceptibilities, one value per node.
    #[arg(long)]
    s_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Read the edge list as weighted arcs i -> j and row-normalise.
    #[arg(long, requires = "graph")]
    directed: bool,
    #[command(flatten)]
    profile: ProfileSource,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    steps: StepArgs,
}

#[derive(Args, Debug)]
struct CentralityArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    steps: StepArgs,
    /// Uniform regularisation for the eigenvector centrality.
    #[arg(long, default_value_t = 1e-8)]
    eta: f64,
    /// PageRank damping.
    #[arg(long, default_value_t = 0.85)]
    alpha: f64,
    /// Broadcasting closeness: the U-weighted hop form or the log-metric form.
    #[arg(long, value_enum, default_value_t = Closeness::Definition)]
    closeness: Closeness,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Closeness {
    Definition,
    LogMetric,
}

impl From<Closeness> for ClosenessVariant {
    fn from(c: Closeness) -> Self {
        match c {
            Closeness::Definition => ClosenessVariant::Definition,
            Closeness::LogMetric => ClosenessVariant::LogMetric,
        }
    }
}

#[derive(Args, Debug)]
struct CampaignArgs {
    /// Campaign config or a manifest written by an earlier campaign.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of runs [config default: 2000].
    #[arg(long)]
    runs: Option<usize>,
    /// Probability that a node is stubborn (s = 0) [config default: 0.15].
    #[arg(long)]
    p0: Option<f64>,
    /// Mean of the Beta part of the susceptibility prior [config default: 0.5].
    #[arg(long)]
    mu: Option<f64>,
    /// Concentration of the Beta part [config default: 4].
    #[arg(long)]
    kappa: Option<f64>,
    /// Radius of the stabilization ball [config default: 1e-6].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Largest number of simulated steps per source [config default: 1000000].
    #[arg(long)]
    t_cap: Option<u32>,
    /// Uniform regularisation for the eigenvector centrality [config default: 1e-8].
    #[arg(long)]
    eta: Option<f64>,
    /// PageRank damping [config default: 0.85].
    #[arg(long)]
    alpha: Option<f64>,
    /// Base seed; run r draws from stream r [config default: 20240611].
    #[arg(long)]
    seed: Option<u64>,
    /// Built-in dataset [config default: karate].
    #[arg(long)]
    dataset: Option<String>,
    /// Broadcasting closeness variant [config default: definition].
    #[arg(long, value_enum)]
    closeness: Option<Closeness>,
    /// Also write every run's centralities to runs.csv.
    #[arg(long)]
    keep_runs: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use fj_core::Error;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Parse { .. } => 3,
                Error::NotWellPosed { .. } => 4,
                Error::CapReached { .. } => 5,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
