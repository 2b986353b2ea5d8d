use std::path::PathBuf;
use std::process::ExitCode;

use blockpert_cli::{execute, Command, Invocation};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "blockpert", version, about = "Block-matrix perturbation theory runs")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Compare the configured methods on every (lambda, t) pair
    Run(Args),
    /// Like `run`, plus log-log slopes of the errors against lambda
    Scan(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML problem description
    config: PathBuf,
    /// Write the table here instead of stdout, with a JSON sidecar beside it
    #[arg(long)]
    out: Option<PathBuf>,
    /// Enable every method and check their mutual agreement
    #[arg(long)]
    verify: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Run(a) => (Command::Run, a),
        Sub::Scan(a) => (Command::Scan, a),
    };
    let inv = Invocation {
        command,
        config: args.config,
        out: args.out,
        verify: args.verify,
    };
    match execute(&inv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
