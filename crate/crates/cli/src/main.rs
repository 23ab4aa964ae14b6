use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use popscale_cli::{CliError, RunOptions};

#[derive(Parser)]
#[command(name = "popscale", version, about = "Run and summarize population-scaling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every (sweep × seed) cell of a configuration.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config and the POPSCALE_OUTPUT_DIR variable.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of worker threads.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Summarize a finished run from its manifest.
    Report { manifest: PathBuf },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out, parallel } => {
            let outcome = popscale_cli::run(&read(&config)?, &RunOptions { out, parallel })?;
            println!("wrote {}", outcome.manifest_path.display());
            outcome.failure().map_or(Ok(()), Err)
        }
        Command::Report { manifest } => {
            let table = popscale_cli::report(&manifest)?;
            print!("{}", String::from_utf8_lossy(&table.to_csv()?));
            Ok(())
        }
        Command::Validate { config } => {
            let cells = popscale_cli::validate(&read(&config)?)?;
            println!("ok: {cells} cell(s)");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
