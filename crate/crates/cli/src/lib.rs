//! Command-line front end for the coupled Brusselator network toolkit.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{execute, Cli, Command, Outcome};
pub use config::{builtin, ScenarioConfig, BUILTIN_NAMES};
pub use error::CliError;
pub use report::RunReport;

/// Environment variable capping the worker threads (0 = automatic).
pub const THREADS_ENV: &str = "BRUSSELATOR_NET_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`].
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a nonnegative integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}
