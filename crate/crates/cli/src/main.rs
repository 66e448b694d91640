mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bneb::experiments::DEFAULT_DELTAS;
use bneb::montecarlo::DEFAULT_REPLICATES;

#[derive(Parser)]
#[command(
    name = "bneb",
    version,
    about = "Bayesian error-bars for belief-network queries"
)]
struct Cli {
    /// Worker threads for Monte Carlo work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior mean, variance and credible intervals of a query.
    Query(QueryArgs),
    /// Check a query's intervals against posterior replicates.
    Validate(ValidateArgs),
    /// Forward-sample records from a network with a `cpt`.
    Simulate(SimulateArgs),
    /// Run a diamond, random-network or file-based study.
    Experiment(ExperimentArgs),
    /// Exact validity scores under perfectly calibrated intervals.
    GoldStandard(GoldArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PosteriorArgs {
    #[arg(long)]
    network: PathBuf,
    /// CSV records; omitted means m = 0.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Pseudocount file; omitted means all ones.
    #[arg(long)]
    prior: Option<PathBuf>,
    /// Hypothesis, e.g. "X1=1,X2=0".
    #[arg(long)]
    target: String,
    #[arg(long, default_value = "")]
    evidence: String,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DELTAS)]
    delta: Vec<f64>,
}

#[derive(Args)]
pub struct QueryArgs {
    #[command(flatten)]
    posterior: PosteriorArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    posterior: PosteriorArgs,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    #[arg(long, env = "BNEB_SEED", default_value_t = 0)]
    seed: u64,
    /// Also write the QQ points as CSV.
    #[arg(long)]
    qq_out: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    network: PathBuf,
    /// Number of records.
    #[arg(short = 'm', long)]
    records: usize,
    #[arg(long, env = "BNEB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Diamond,
    Random,
    File,
}

#[derive(Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// JSON experiment config; required for `file`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, env = "BNEB_SEED")]
    seed: Option<u64>,
    /// Directory for grid.csv, grid.txt and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
pub struct GoldArgs {
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DELTAS)]
    delta: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    replicates: usize,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Query(a) => commands::query(a),
        Command::Validate(a) => commands::validate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::GoldStandard(a) => commands::gold_standard(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
