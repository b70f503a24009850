use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ed_cli::commands;
use ed_cli::CliResult;

#[derive(Parser)]
#[command(name = "edsim", version, about = "Entropic dynamics scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectory, field and ensemble outputs.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a walker ensemble with a density or wave-function file.
    Compare { ensemble: PathBuf, field: PathBuf },
    /// Check the e-phase geometry identities.
    AuditGeometry { config: PathBuf },
    /// Winding numbers of a phase or wave-function file along an axis.
    Winding {
        field: PathBuf,
        #[arg(long = "loop", default_value_t = 0)]
        axis: usize,
    },
}

fn dispatch(cli: Cli) -> CliResult<(String, bool)> {
    match cli.command {
        Command::Run { config, seed, out } => Ok((commands::run(&config, seed, out)?, true)),
        Command::Compare { ensemble, field } => Ok((commands::compare(&ensemble, &field)?, true)),
        Command::AuditGeometry { config } => commands::audit_geometry(&config),
        Command::Winding { field, axis } => commands::winding(&field, axis),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
