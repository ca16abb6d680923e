//! `uam`: connectivity, staleness and federated training experiments.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error,
//! 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uam_sim::config::RunnerChoice;
use uam_sim::experiments;
use uam_sim::{ExperimentConfig, Result, SimError};

#[derive(Parser, Debug)]
#[command(name = "uam", version, about = "UAM network connectivity and asynchronous federated learning experiments")]
struct Cli {
    /// TOML configuration; omitted keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Overrides `out_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the Monte Carlo trial counts.
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// Overrides `train.runner`: afl, afl-stale-free, fedavg or scalable.
    #[arg(long, global = true, value_name = "NAME")]
    runner: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytical and Monte Carlo connectivity curves and parameter sweeps.
    Connectivity,
    /// Staleness CDF, delay samples and participant count.
    Staleness,
    /// Federated training of the Fourier network on Burgers data.
    Train,
    /// Convergence bounds on the quadratic toy problem.
    Bounds,
    /// Dump of one network realization.
    Realization,
    /// Training and test datasets.
    Dataset,
    /// Print the effective configuration.
    Config,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.display().to_string();
    }
    if let Some(n) = cli.trials {
        cfg.connectivity.trials = n;
        cfg.staleness.trials = n;
    }
    if let Some(r) = &cli.runner {
        cfg.train.runner = RunnerChoice::parse(r)
            .ok_or_else(|| SimError::Config(format!("unknown runner `{r}`; expected afl, afl-stale-free, fedavg or scalable")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    let written = match cli.command {
        Command::Connectivity => experiments::cmd_connectivity(&cfg)?,
        Command::Staleness => experiments::cmd_staleness(&cfg)?,
        Command::Train => experiments::cmd_train(&cfg)?,
        Command::Bounds => experiments::cmd_bounds(&cfg)?,
        Command::Realization => experiments::cmd_realization(&cfg)?,
        Command::Dataset => experiments::cmd_dataset(&cfg)?,
        Command::Config => {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uam: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
