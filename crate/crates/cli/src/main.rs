mod args;
mod config;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

fn exit_code(err: &anyhow::Error) -> u8 {
    use opl_core::Error as E;
    match err.downcast_ref::<E>() {
        Some(
            E::InvalidParameter(_) | E::DimensionMismatch { .. } | E::EmptyData | E::Parse(_) | E::Io(_) | E::Json(_),
        )
        | None => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match cli.resolve().and_then(run::execute) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
