//! `projens` command-line driver. Each subcommand reads one config file and
//! writes `config.resolved.json`, `result.json` and CSV sidecars into the
//! output directory.

mod cmd_benchmark;
mod cmd_compare;
mod cmd_ensemble;
mod cmd_evolve;
mod cmd_learn;
mod config;
mod error;
mod output;
mod system;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, CliResult};
use crate::output::Output;

#[derive(Parser)]
#[command(
    name = "projens",
    version,
    about = "Projected ensembles, design diagnostics and bitstring fidelity estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time evolution with observables, optional noise and sampled shots.
    Evolve(Common),
    /// Projected-ensemble design distances, moments and histograms.
    Ensemble(Common),
    /// F_c from samples, tables or a noise model.
    Benchmark(Common),
    /// Hamiltonian parameter scans and local-field learning.
    Learn(Common),
    /// Entropy-matched circuit size and effective cycle fidelity.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Config file (`.json`, otherwise TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Caps worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "projens-out")]
    out: PathBuf,
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn run(cli: Cli) -> CliResult<()> {
    let c = match &cli.command {
        Command::Evolve(c) | Command::Ensemble(c) | Command::Benchmark(c) | Command::Learn(c) | Command::Compare(c) => {
            c
        }
    };
    if let Some(t) = c.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = Output::create(&c.out)?;
    let base = base_dir(&c.config);
    match &cli.command {
        Command::Evolve(_) => cmd_evolve::run(config::load(&c.config)?, c.seed, &out),
        Command::Ensemble(_) => cmd_ensemble::run(config::load(&c.config)?, c.seed, &out),
        Command::Benchmark(_) => cmd_benchmark::run(config::load(&c.config)?, c.seed, &base, &out),
        Command::Learn(_) => cmd_learn::run(config::load(&c.config)?, c.seed, &base, &out),
        Command::Compare(_) => cmd_compare::run(config::load(&c.config)?, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("projens: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
