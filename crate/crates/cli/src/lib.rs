//! Command-line surface of the relaxation toolkit: flag and config-file
//! parsing, dispatch to the pipelines, and every output format.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;

use clap::Parser;

pub use config::{Cli, RunConfig};
pub use error::CliError;

pub const THREADS_ENV: &str = "OTOC_RELAX_THREADS";

/// Parses `argv` (program name first) into a validated configuration.
/// `Ok(None)` means help or version text was printed.
pub fn parse(argv: &[OsString]) -> Result<Option<RunConfig>, CliError> {
    let argv = config::expand_args(argv)?;
    match Cli::try_parse_from(&argv) {
        Ok(cli) => {
            let (cmd, flags) = cli.command.split();
            RunConfig::resolve(cmd, flags).map(Some)
        }
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    Ok(None)
                }
                _ => {
                    let text = e.to_string();
                    let first = text.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
                    Err(CliError::Usage(first))
                }
            }
        }
    }
}

fn pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}='{v}' is not a positive integer")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

/// Full driver: parse, run, report. Returns the process exit code.
pub fn run(argv: &[OsString]) -> u8 {
    let result = parse(argv).and_then(|cfg| match cfg {
        Some(cfg) => pool()?.install(|| commands::execute(&cfg)),
        None => Ok(()),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.code()
        }
    }
}
