use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use chebdim::harness::{compare, run, Overrides, RunConfig, RunSummary};

/// Dynamic initial margin with Chebyshev tensors: run experiments and
/// compare methods against brute force.
#[derive(Debug, Parser)]
#[command(name = "chebdim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate, run the configured DIM methods and write CSV outputs.
    Run {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Override the simulation seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of Monte Carlo paths.
        #[arg(long)]
        paths: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated method list, e.g. brute_force,cheb_model_space.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Number of worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Write wall times as 0 so repeated runs give identical files.
        #[arg(long)]
        no_wall_time: bool,
    },
    /// Print error and cost tables from a summary CSV.
    Compare {
        #[arg(long)]
        summary: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            paths,
            out,
            methods,
            threads,
            no_wall_time,
        } => {
            let mut cfg = RunConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            cfg.apply(&Overrides {
                seed,
                paths,
                out_dir: out,
                methods,
                threads,
                record_wall_time: no_wall_time.then_some(false),
            });
            let outcome = run(&cfg)?;
            print!("{}", compare(&outcome.summary));
            println!("Outputs written to {}", cfg.output.dir.display());
        }
        Command::Compare { summary } => {
            let summary = RunSummary::read_csv(&summary)?;
            print!("{}", compare(&summary));
        }
    }
    Ok(())
}
