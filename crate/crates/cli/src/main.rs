//! `rbridge` command line: penalized regression under linear equality
//! restrictions, with config-driven fits, cross-validation, simulations,
//! real-data splitting and verification checks.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure (non-convergence or a singular system), 3 infeasible restriction.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_analyze, cmd_check, cmd_cv, cmd_fit, cmd_simulate, resolve_output_dir, CmdError};
use config::load_config;

#[derive(Parser)]
#[command(name = "rbridge", version, about = "Restricted bridge regression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the root seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for output files (default: config `output_dir` or `.`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override the replication count where applicable.
    #[arg(long)]
    nreps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one estimator and write the result as JSON.
    Fit(CommonArgs),
    /// Cross-validate a (lambda, q) grid; write the table and surface.
    Cv(CommonArgs),
    /// Run a seeded simulation scenario over all estimator arms.
    Simulate(CommonArgs),
    /// Repeated-split evaluation of a real dataset against priors.
    Analyze(CommonArgs),
    /// Run a verification check (mse_formula, consistency, oracle_equivalence).
    Check(CommonArgs),
}

fn run(cli: Cli) -> Result<i32, CmdError> {
    let (name, args) = match &cli.command {
        Command::Fit(a) => ("fit", a),
        Command::Cv(a) => ("cv", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Analyze(a) => ("analyze", a),
        Command::Check(a) => ("check", a),
    };
    let mut config = load_config(&args.config)?;
    let seed = args.seed.unwrap_or(config.seed);
    let output_dir = resolve_output_dir(args.output_dir.clone(), config.output_dir.take());
    std::fs::create_dir_all(&output_dir)?;

    let missing = || CmdError::Usage(format!("config has no [{name}] section"));
    match &cli.command {
        Command::Fit(_) => cmd_fit(config.fit.as_ref().ok_or_else(missing)?, seed, &output_dir),
        Command::Cv(_) => cmd_cv(config.cv.as_ref().ok_or_else(missing)?, seed, &output_dir),
        Command::Simulate(a) => {
            let mut section = config.simulate.take().ok_or_else(missing)?;
            if let Some(nreps) = a.nreps {
                section.nreps = nreps;
            }
            cmd_simulate(&section, seed, &output_dir)
        }
        Command::Analyze(a) => {
            let mut section = config.analyze.take().ok_or_else(missing)?;
            if let Some(nreps) = a.nreps {
                section.nreps = Some(nreps);
            }
            cmd_analyze(&section, seed, &output_dir)
        }
        Command::Check(a) => {
            let mut section = config.check.take().ok_or_else(missing)?;
            if let Some(nreps) = a.nreps {
                section.nreps = Some(nreps);
            }
            cmd_check(&section, seed, &output_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
