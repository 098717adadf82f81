//! Command-line front end for `idsense-core`: channel and config files, the five
//! commands and their JSON/CSV reports.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use config::{load_config, Settings};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "idsense", version, about = "Identification capacity with feedback and state sensing")]
pub struct Cli {
    /// JSON file pinning an experiment; flags override its fields
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shannon capacity and both feedback ID capacities
    Capacity(#[command(flatten)] Settings),
    /// Capacity-distortion curves over a budget grid
    Tradeoff(#[command(flatten)] Settings),
    /// Optimal state estimator and minimal distortion profile
    Estimate {
        #[command(flatten)]
        settings: Settings,
        /// Corrupt one estimator entry (exercises the oracle cross-check)
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Build a feedback ID code and measure its errors and distortion
    Simulate(#[command(flatten)] Settings),
    /// Image-size bounds K1..K4
    Bounds(#[command(flatten)] Settings),
}

/// Runs a parsed command line and writes its artifact.
pub fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => Some((load_config(path)?, path.parent().unwrap_or(Path::new(".")).to_path_buf())),
        None => None,
    };
    let resolve = |flags: Settings| match &file {
        Some((cfg, base)) => flags.merge(cfg.clone(), base),
        None => flags,
    };
    let (settings, artifact) = match cli.command {
        Command::Capacity(s) => {
            let s = resolve(s);
            let a = commands::capacity(&s)?;
            (s, a)
        }
        Command::Tradeoff(s) => {
            let s = resolve(s);
            let a = commands::tradeoff(&s)?;
            (s, a)
        }
        Command::Estimate { settings, inject_fault } => {
            let s = resolve(settings);
            let a = commands::estimate(&s, inject_fault)?;
            (s, a)
        }
        Command::Simulate(s) => {
            let s = resolve(s);
            let a = commands::simulate(&s)?;
            (s, a)
        }
        Command::Bounds(s) => {
            let s = resolve(s);
            let a = commands::bounds(&s)?;
            (s, a)
        }
    };
    output::emit(&artifact, settings.format(), settings.out.as_deref())
}
