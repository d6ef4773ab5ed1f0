//! Command-line front end: scene generation, registration, degeneracy
//! reports, Monte Carlo oracle checks and parameter sweeps.

pub mod commands;
pub mod config;
pub mod inputs;
pub mod io;
pub mod parallel;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "degen-icp", version, about = "Probabilistic degeneracy detection for point-to-plane ICP")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene (clean and noisy clouds plus manifest).
    Simulate(commands::simulate::SimulateArgs),
    /// Report per-direction degeneracy probabilities.
    Detect(commands::detect::DetectArgs),
    /// Register a source cloud against a target.
    Register(commands::register::RegisterArgs),
    /// Compare analytic and Monte Carlo Hessian statistics.
    Oracle(commands::oracle::OracleArgs),
    /// Sweep a parameter and write probabilities as CSV.
    Sweep(commands::sweep::SweepArgs),
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Detect(a) => commands::detect::run(a),
        Command::Register(a) => commands::register::run(a),
        Command::Oracle(a) => commands::oracle::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
    }
}
