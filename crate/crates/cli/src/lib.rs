//! Command-line driver for `loglab`.
//!
//! Exit codes: 0 success, 1 a verdict failed, 2 solver or output failure,
//! 3 configuration or usage error.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Command;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERDICT: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Solver(_) => EXIT_SOLVER,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Solver(e) => e,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "loglab", version, about = "Steady states of the diffusive logistic equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArg,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Solve sweep rows independently in parallel.
    #[arg(long, global = true)]
    pub parallel: bool,
    /// Grid nodes (odd, at least 65); overrides the config.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Accepted for scripts: every command is deterministic.
    #[arg(long, global = true)]
    pub seedless: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum CommandArg {
    /// Solve at a single diffusion rate.
    Solve,
    /// Tabulate extrema and moments over a range of diffusion rates.
    Sweep,
    /// Check the monotonicity and sign statements that apply to the profile.
    Verify,
    /// Large-diffusion expansion of the steady state.
    Asymptotics,
    /// Search a profile family for positive first-order correction.
    Hunt,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Solve => Command::Solve,
            CommandArg::Sweep => Command::Sweep,
            CommandArg::Verify => Command::Verify,
            CommandArg::Asymptotics => Command::Asymptotics,
            CommandArg::Hunt => Command::Hunt,
        }
    }
}

/// Runs a parsed invocation and returns the process exit code.
pub fn execute(cli: &Cli) -> u8 {
    match try_execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            f.code()
        }
    }
}

fn try_execute(cli: &Cli) -> Result<u8, Failure> {
    let command: Command = cli.command.into();
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config(anyhow::anyhow!("--config <path> is required")))?;
    let overrides = config::Overrides {
        n: cli.n,
        parallel: cli.parallel,
    };
    let cfg = config::load(path, overrides).map_err(Failure::Config)?;
    log::info!("{command:?} on {} with n = {}", cfg.profile.label(), cfg.n);

    let outcome = commands::run(command, &cfg)?;
    let out_dir = cli.out.clone().unwrap_or_else(commands::default_out_dir);
    let mut artifacts = outcome.artifacts;
    let mut files = artifacts.names();
    files.push("run_meta.json".into());
    let meta = commands::run_meta(command, path, &cfg, cli.seedless, &files)
        .map_err(Failure::Solver)?;
    artifacts.text("run_meta.json", meta);
    artifacts.write_all(&out_dir).map_err(Failure::Solver)?;

    Ok(if outcome.verdict_failed {
        EXIT_VERDICT
    } else {
        EXIT_OK
    })
}
