use std::process::ExitCode;

use clap::Parser;
use dkm_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(manifest) => {
            for f in &manifest.failed {
                eprintln!("failed: {} ({})", f.cell, f.error);
            }
            eprintln!(
                "{}: {} file(s), {} failed cell(s), {:.2} s",
                manifest.subcommand,
                manifest.outputs.len() + 1,
                manifest.failed.len(),
                manifest.duration_s
            );
            if manifest.failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
