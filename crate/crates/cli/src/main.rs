//! `crowdqf` command-line tool.

mod args;
mod commands;
mod manifest;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use crowdqf::Error;

use crate::args::{Cli, Command};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Configuration(_) => EXIT_CONFIG,
        Error::MalformedInput(_)
        | Error::InvalidArgument(_)
        | Error::InsufficientData(_)
        | Error::Io { .. } => EXIT_DATA,
    }
}

/// Parse `argv` and run it; `Err` carries the exit code.
pub fn run(argv: Vec<OsString>) -> Result<(), u8> {
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Err(EXIT_USAGE) } else { Ok(()) };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| {
        let _ = e.print();
        EXIT_USAGE
    })?;

    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return Err(EXIT_USAGE);
        }
        // Fails only when a global pool already exists, e.g. on replay.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }

    let result = match &cli.command {
        Command::Replay(r) => commands::replay(r),
        command => {
            let outcome = commands::dispatch(command, cli.seed);
            match (&outcome, &cli.manifest) {
                (Ok(()), Some(path)) => {
                    let (name, sub) = matches.subcommand().expect("subcommand is required");
                    let root = Cli::command();
                    let command = root.find_subcommand(name).expect("parsed subcommand exists");
                    manifest::Manifest::capture(command, cli.seed, &argv, sub).write(path)
                }
                _ => outcome,
            }
        }
    };
    result.map_err(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
