use std::process::ExitCode;

use clap::Parser;
use degen_icp::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match degen_icp::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
