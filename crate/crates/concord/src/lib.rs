//! IO, reports and the command-line front end for `concord-core`.

pub mod cli;
pub mod error;
pub mod io;
pub mod report;

pub use error::{CliError, CliResult};

use std::fs;

/// Run a parsed command line: analysis, then report and series output.
pub fn execute(cli: &cli::Cli) -> CliResult<String> {
    let report = cli::run(cli)?;
    let text = report.render(cli.format);
    if let Some(dir) = &cli.series_dir {
        report.write_series(dir)?;
    }
    if let Some(path) = &cli.out {
        fs::write(path, &text).map_err(|source| CliError::Write { path: path.clone(), source })?;
    }
    Ok(text)
}
