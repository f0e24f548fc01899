use std::process::ExitCode;

use clap::Parser;
use followcast::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match followcast::commands::run(cli) {
        Ok(manifest) => {
            eprintln!("manifest={}", manifest.out.join(followcast::manifest::Manifest::file_name(&manifest.command)).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
