// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! The `cmerw` command-line front end.
//!
//! Exit status: 0 when every hard check passes, 1 when a hard verification
//! check fails, 2 for usage, configuration and i/o errors.

pub mod args;
pub mod commands;
pub mod error;
pub mod provenance;
pub mod svg;
pub mod trajectory_csv;

use clap::Parser;

pub use args::Cli;
pub use commands::{EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION_FAILED};
pub use error::{CliError, CliResult};

/// Parses `argv` and runs the command, returning the exit status.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::run(&cli.command, &argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cmerw: {e}");
            EXIT_USAGE
        }
    }
}
