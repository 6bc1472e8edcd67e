use brusselator_net::{Error, ErrorKind};
use thiserror::Error;

/// Failure of a command, carrying the exit status it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input: bad flags, unreadable or ill-shaped configs.
    #[error("{0}")]
    Usage(String),
    /// Well-formed input that breaks a model invariant.
    #[error("{0}")]
    Domain(String),
    /// Non-convergence, blow-up and similar numerical failures.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e.kind() {
            ErrorKind::Structural => CliError::Usage(msg),
            ErrorKind::Domain => CliError::Domain(msg),
            ErrorKind::Numerical => CliError::Numerical(msg),
        }
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}

from_core!(
    brusselator_net::error::NetworkError,
    brusselator_net::error::EquilibriumError,
    brusselator_net::error::SpectrumError,
    brusselator_net::error::HopfError,
    brusselator_net::error::DynamicsError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("invalid JSON: {e}"))
    }
}
