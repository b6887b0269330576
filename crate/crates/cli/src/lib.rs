//! Command-line front end for the `mbonacci` crate.
//!
//! [`dispatch`] is the whole program; `main` only forwards the process
//! arguments and exits with its return value. Keeping it in a library lets
//! integration tests drive the CLI in-process.

pub mod args;
pub mod commands;
pub mod output;
pub mod repro;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;

/// Environment variable overriding the root-finding precision in decimal digits.
pub const PRECISION_ENV: &str = "MBONACCI_PRECISION_DIGITS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// A flag combination rejected before any computation starts.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub(crate) fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Failed checks in a `repro` run. The report has already been written.
#[derive(Debug)]
pub struct ChecksFailed(pub usize);

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} reproduction check(s) failed", self.0)
    }
}

impl std::error::Error for ChecksFailed {}

/// Parse `args` (program name first) and run the subcommand.
///
/// Returns 0 on success, 2 on a usage error and 1 on a computation error.
/// Errors are written to `stderr` as a single line starting with `error:`.
pub fn dispatch<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let text = e.render().to_string();
                    let text = text.trim_end();
                    if text.starts_with("error:") {
                        let _ = writeln!(stderr, "{text}");
                    } else {
                        let _ = writeln!(stderr, "error: {text}");
                    }
                    EXIT_USAGE
                }
            };
        }
    };

    match commands::run(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = if e.is::<UsageError>() { EXIT_USAGE } else { EXIT_FAILURE };
            let _ = writeln!(stderr, "error: {}", one_line(&e));
            code
        }
    }
}

fn one_line(e: &anyhow::Error) -> String {
    format!("{e:#}").replace('\n', " ")
}
