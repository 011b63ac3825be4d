//! Command-line front end for the `quadvol` library: experiment
//! configuration, the six subcommands, and native SVG rendering.
//!
//! The binary's contract is small: exit code 0 on success, 2 for
//! configuration or usage problems, and 3 when a numerical routine reports
//! that it could not produce a result.

pub mod commands;
pub mod config;
pub mod svg;

use std::ffi::OsString;

use clap::Parser;

/// Exit code for a failed run: 3 if any error in the chain is a numerical
/// failure reported by the library, 2 (configuration/usage) otherwise.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<quadvol::Error>() {
            if e.is_numerical() {
                return 3;
            }
        }
    }
    2
}

/// Parses arguments and runs the selected command, returning the process
/// exit code. `--help` and `--version` print to stdout and count as success.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn plain_configuration_errors_exit_2() {
        let err = anyhow::anyhow!("rho_grid: must contain at least one correlation");
        assert_eq!(exit_code_for(&err), 2);
    }

    #[test]
    fn numerical_library_errors_exit_3_even_wrapped() {
        let base: anyhow::Error = quadvol::Error::DegenerateRoot.into();
        assert_eq!(exit_code_for(&base), 3);
        let wrapped = Err::<(), _>(quadvol::Error::TooFewSamples { n: 1 })
            .context("summarizing hedge errors")
            .unwrap_err();
        assert_eq!(exit_code_for(&wrapped), 3);
    }

    #[test]
    fn non_numerical_library_errors_exit_2() {
        let err: anyhow::Error = quadvol::Error::UnknownPreset("gamma".into()).into();
        assert_eq!(exit_code_for(&err), 2);
    }

    #[test]
    fn usage_problems_exit_2_and_help_exits_0() {
        assert_eq!(run_from(["quadvol", "--no-such-flag", "table"]), 2);
        assert_eq!(run_from(["quadvol", "--help"]), 0);
        assert_eq!(run_from(["quadvol", "--version"]), 0);
    }
}
