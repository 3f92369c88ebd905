//! `sbmrd`: rate-distortion functions of SBM and Erdős–Rényi graph sources.
//!
//! Exit codes: 0 success, 1 computation or infeasibility, 2 config or usage,
//! 3 oracle non-convergence. Data goes to stdout (or `--out`), diagnostics to
//! stderr.

mod commands;
mod config;
mod error;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Overrides;
use crate::config::CommandConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "sbmrd",
    version,
    about = "Rate-distortion functions of random graph sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy (ER) or conditional entropy and interval (SBM) as JSON.
    Entropy(Common),
    /// Rate-distortion curve as CSV.
    Curve(Common),
    /// Optimal distortion allocation and KKT summary as JSON.
    Waterfill(Common),
    /// Compare the closed form against the Blahut–Arimoto oracle.
    Verify(Common),
    /// Monte Carlo check of the test channel's distortion.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file, or `-` for stdin.
    #[arg(long, default_value = "-")]
    config: PathBuf,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Absolute Hamming distortion.
    #[arg(long = "D", allow_negative_numbers = true)]
    d: Option<f64>,
    /// Number of uniform grid points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance on |oracle - closed form| in bits.
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Worker threads for the trials.
    #[arg(long)]
    threads: Option<usize>,
    /// Write labels, graph and reconstruction of trial 0 into this directory.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

impl Common {
    fn overrides(&self, threads: Option<usize>) -> Overrides {
        Overrides {
            d: self.d,
            points: self.points,
            trials: self.trials,
            seed: self.seed,
            tol: self.tol,
            threads,
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Compute(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Entropy(c) => {
            let text = commands::cmd_entropy(CommandConfig::load(&c.config)?)?;
            emit(&c.out, &text)?;
        }
        Command::Curve(c) => {
            let text = commands::cmd_curve(CommandConfig::load(&c.config)?, &c.overrides(None))?;
            emit(&c.out, &text)?;
        }
        Command::Waterfill(c) => {
            let text =
                commands::cmd_waterfill(CommandConfig::load(&c.config)?, &c.overrides(None))?;
            emit(&c.out, &text)?;
        }
        Command::Verify(c) => {
            let (text, ok) =
                commands::cmd_verify(CommandConfig::load(&c.config)?, &c.overrides(None))?;
            emit(&c.out, &text)?;
            return Ok(ok);
        }
        Command::Simulate(s) => {
            let c = &s.common;
            let text = commands::cmd_simulate(
                CommandConfig::load(&c.config)?,
                &c.overrides(s.threads),
                s.dump_dir.as_deref(),
            )?;
            emit(&c.out, &text)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some oracle comparisons exceed the tolerance");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
