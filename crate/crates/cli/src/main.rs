use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmc_core::cli::{run, Command, LoadedConfig, Overrides};

/// Coupled Markov chain credit workflow: estimate, simulate, price, optimize.
#[derive(Parser)]
#[command(name = "cmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Stage,
}

#[derive(Subcommand)]
enum Stage {
    /// Fit coupling and tendency parameters to a rating history.
    Estimate(Args),
    /// Generate a Monte Carlo scenario file.
    Simulate(Args),
    /// Fair spreads, returns and loss histograms for each tranche.
    Price(Args),
    /// Minimum-CVaR portfolio at the configured target mean.
    Optimize(Args),
    /// Sweep target means and record the efficient frontier.
    Frontier(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Stage::Estimate(a) => (Command::Estimate, a),
        Stage::Simulate(a) => (Command::Simulate, a),
        Stage::Price(a) => (Command::Price, a),
        Stage::Optimize(a) => (Command::Optimize, a),
        Stage::Frontier(a) => (Command::Frontier, a),
    };
    let overrides = Overrides {
        seed: args.seed,
        out: args.out,
    };
    let result = LoadedConfig::load(&args.config, &overrides).and_then(|loaded| run(command, &loaded));
    match result {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
