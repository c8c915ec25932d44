mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{read_document, RunConfig};
use crate::error::CliError;

/// Fit, validate and sample LoRa propagation channel models.
#[derive(Debug, Parser)]
#[command(name = "lorachan", version, about)]
struct Cli {
    /// Run configuration (TOML or JSON); flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit pathloss and fading models to a dataset
    Fit(RunConfig),
    /// Check fitted models against a dataset
    Validate(RunConfig),
    /// Generate synthetic SNR traces from fitted models
    Generate(RunConfig),
    /// Print a model summary with closure checks
    Report(RunConfig),
    /// Write a synthetic SigMF campaign drawn from a model
    SynthDataset(RunConfig),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let base: RunConfig = match &cli.config {
        Some(path) => read_document(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Fit(flags) => commands::fit(&base.overlay(&flags)),
        Command::Validate(flags) => commands::validate(&base.overlay(&flags)),
        Command::Generate(flags) => commands::generate(&base.overlay(&flags)),
        Command::Report(flags) => commands::report(&base.overlay(&flags)),
        Command::SynthDataset(flags) => commands::synth_dataset(&base.overlay(&flags)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
