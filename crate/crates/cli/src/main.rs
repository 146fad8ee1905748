//! `nozzle`: batch runner for the conical nozzle flow experiments.
//!
//! Exit codes: 0 success, 2 a check missed its threshold, 3 a march aborted,
//! 64 bad arguments or configuration, 74 output could not be written.

mod checks;
mod commands;
mod config;
mod outcome;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::checks::Ctx;
use crate::config::ExperimentConfig;
use crate::outcome::Failure;
use crate::output::OutDir;

#[derive(Debug, Parser)]
#[command(name = "nozzle", version, about = "Supersonic conical nozzle flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment configuration; defaults are used when absent.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`); created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for random probes and the test-function family (overrides `output.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Doublings of the angular grid; also adds inequality grid levels.
    #[arg(long, global = true, default_value_t = 0, conflicts_with = "coarse")]
    refine: u32,

    /// Write two-column `.dat` series under `plot/`.
    #[arg(long, global = true)]
    plot_data: bool,

    /// Halve the angular grid; flux tolerances follow the coarser grid.
    #[arg(long, global = true)]
    coarse: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Background table, decay fits and coefficient sign report.
    Background,
    /// March every configured amplitude and write the traces.
    March,
    /// Run every diagnostic against its threshold.
    Verify,
    /// Weighted interpolation inequality study on the seeded family.
    Ineq,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(cli.config.as_deref())?;
    let params = cfg.gas_params()?;
    let root = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let out = OutDir::create(&root, cli.plot_data)?;
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(cfg.output.seed),
        refine: if cli.coarse { -1 } else { cli.refine as i32 },
        cfg,
        params,
    };
    match cli.command {
        Command::Background => commands::background(&ctx, &out),
        Command::March => commands::run_march(&ctx, &out),
        Command::Verify => commands::verify(&ctx, &out),
        Command::Ineq => commands::ineq(&ctx, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            f.exit()
        }
    }
}
