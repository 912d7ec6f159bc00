//! Command-line front end: gradient self-check, the three-class illustration
//! run, teacher-student experiments, and dataset generation/export.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error.

mod datagen_cmd;
mod experiment_cmd;
mod gradcheck_cmd;
mod manifest;
mod simulate_cmd;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

pub const EXIT_OK: u8 = 0;
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "robustssl",
    version,
    about = "Robust-loss teacher-student training harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify analytic loss gradients against finite differences.
    Gradcheck(gradcheck_cmd::GradcheckArgs),
    /// Train CE and robust perceptrons on the mislabeled-cluster scene and
    /// export dataset, decision grid, and accuracy summary.
    Simulate(simulate_cmd::SimulateArgs),
    /// Run the teacher-student experiment with lower/upper bounds.
    Experiment(experiment_cmd::ExperimentArgs),
    /// Generate a mixture dataset and write CSV + manifest.
    Datagen(datagen_cmd::DatagenArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Gradcheck(args) => gradcheck_cmd::run(args),
        Command::Simulate(args) => simulate_cmd::run(args),
        Command::Experiment(args) => experiment_cmd::run(args),
        Command::Datagen(args) => datagen_cmd::run(args),
    };
    ExitCode::from(code)
}

/// Classify an error as configuration (exit 2) or runtime (exit 1).
pub fn exit_code_for(err: &robustssl::Error) -> u8 {
    use robustssl::Error::*;
    match err {
        Config(_) | InvalidHyperparameter(_) => EXIT_CONFIG,
        InvalidInput(_) | Numeric { .. } | Io(_) | Serde(_) | Csv(_) => EXIT_RUNTIME,
    }
}

/// Shared output-directory setup.
pub fn ensure_out_dir(out: &PathBuf) -> robustssl::Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}
