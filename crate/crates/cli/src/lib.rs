//! Command-line front end: argument parsing, configuration merging,
//! CSV/JSON outputs and run manifests.

mod args;
mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use commands::{run_id, trace_csv, Checks};
pub use output::{fmt17, verify_manifest, ExperimentManifest};

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 2.
    Usage(String),
    /// Anything else: exit code 1.
    Internal(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn internal<E: Into<anyhow::Error>>(e: E) -> Self {
        CliError::Internal(e.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Internal(e) => write!(f, "{e:#}"),
        }
    }
}

/// One line, whatever the error text looks like.
fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Runs one command, writing results to `stdout` and at most one
/// diagnostic line to `stderr`. Returns the process exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match args::Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "{}", one_line(first));
            return 2;
        }
    };
    // The program path varies between installs; the manifest records the
    // command as it would be typed.
    let command_line = std::iter::once(String::from("cone-iso"))
        .chain(argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()))
        .collect::<Vec<_>>()
        .join(" ");
    let mut ctx = commands::Ctx { stdout, command_line };
    let result = match &cli.command {
        args::Command::Profile(a) => commands::profile(&mut ctx, a),
        args::Command::Compare(a) => commands::compare(&mut ctx, a),
        args::Command::Existence(a) => commands::existence(&mut ctx, a),
        args::Command::Minimize(a) => commands::minimize(&mut ctx, a),
        args::Command::Sweep(a) => commands::sweep(&mut ctx, a),
        args::Command::Stability(a) => commands::stability(&mut ctx, a),
        args::Command::Checks(a) => commands::checks(&mut ctx, a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", one_line(&e.to_string()));
            e.exit_code()
        }
    }
}
