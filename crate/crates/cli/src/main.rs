//! `qrob` — batch front door for the robustness diagnostics.
//!
//! Every subcommand reads one JSON config (schema-validated, unknown keys
//! rejected) and writes CSV for grids and JSON for scalars and verdicts.
//! Outputs are deterministic functions of `(config, master_seed)`:
//! byte-identical across runs and across `--threads` settings.
//!
//! Exit codes: 0 success, 2 config error, 3 computation error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Compute(msg) => write!(f, "computation error: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qrob",
    version,
    about = "Probability metrics and Monte-Carlo robustness diagnostics for point estimators"
)]
struct Cli {
    /// Worker threads for replication loops; affects wall time only, never
    /// output bytes.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Prohorov, Wasserstein, and gauge distances between two measures.
    Metric(ConfigArg),
    /// Average Value at Risk of a measure, both representations.
    Avar(ConfigArg),
    /// Robustness surface along a contamination path, plus verdict.
    Surface(ConfigArg),
    /// Index-of-robustness estimate for a plug-in functional.
    Ior(ConfigArg),
    /// Information-bound check and L1 density continuity sweep.
    Parametric(ConfigArg),
    /// Two-path premium-estimator experiment (escaping vs bounded atom).
    PremiumExperiment(ConfigArg),
    /// Yule-Walker surface and consistency check for a linear process.
    YwExperiment(ConfigArg),
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Metric(a) => commands::cmd_metric(&a.config),
        Command::Avar(a) => commands::cmd_avar(&a.config),
        Command::Surface(a) => commands::cmd_surface(&a.config),
        Command::Ior(a) => commands::cmd_ior(&a.config),
        Command::Parametric(a) => commands::cmd_parametric(&a.config),
        Command::PremiumExperiment(a) => commands::cmd_premium_experiment(&a.config),
        Command::YwExperiment(a) => commands::cmd_yw_experiment(&a.config),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match cli.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
            pool.install(|| dispatch(&cli.command))
        }
        None => dispatch(&cli.command),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
