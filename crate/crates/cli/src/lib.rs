//! Command-line front end: ingest, experiment, select, train, forecast,
//! backtest and report, plus a league simulator for demos.
//!
//! Exit codes: 0 success, 2 bad input (file, flag or config), 3 runtime
//! failure.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod forecast;
pub mod pipeline;
pub mod snapshot;

pub use cli::{run, Cli};
pub use config::ExperimentConfig;
pub use error::CliError;

/// Sizes the global rayon pool from `ODDSMITH_THREADS` (unset or 0 = one
/// thread per core).
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ODDSMITH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("ODDSMITH_THREADS must be a non-negative integer, got `{raw}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    Ok(())
}
