use std::process::ExitCode;

use clap::Parser;
use oledcolor_cli::commands::{run, serve_blocking, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Serve { addr } => serve_blocking(&cli, addr),
        _ => run(&cli, &mut std::io::stdout().lock()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
