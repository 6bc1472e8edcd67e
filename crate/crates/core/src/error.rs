use num_complex::Complex64;
use thiserror::Error;

use crate::network::ValidationReport;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("coupling matrix needs at least 2 patches, got {0}")]
    TooSmall(usize),
    #[error("matrix is not square: {rows} rows but row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("coupling matrix violates {} invariant(s)", .0.violations.len())]
    Invalid(ValidationReport),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Perron vector did not converge (residual {residual:e})")]
    PerronNoConvergence { residual: f64 },
}

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("Newton iteration failed at lambda = {lambda} (residual {residual:e})")]
    NoConvergence { lambda: f64, residual: f64, x: Vec<f64>, y: Vec<f64> },
    #[error("converged state has a nonpositive component (min {min:e}) at lambda = {lambda}")]
    Positivity { lambda: f64, min: f64, x: Vec<f64>, y: Vec<f64> },
    #[error("state has {got} entries, model has {expected}")]
    Shape { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("QR iteration did not converge ({} eigenvalues found)", found.len())]
    QrNoConvergence { found: Vec<Complex64> },
    #[error("eigenvector residual {residual:e} exceeds bound {bound:e}")]
    EigenvectorResidual { residual: f64, bound: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("equilibrium solved at (lambda, beta) = ({eq_lambda}, {eq_beta}) but model has ({lambda}, {beta})")]
    ParameterMismatch { lambda: f64, beta: f64, eq_lambda: f64, eq_beta: f64 },
}

#[derive(Debug, Error)]
pub enum HopfError {
    #[error("no sign change of the spectral abscissa on [{beta_lo}, {beta_hi}] (abscissa {abscissa_lo:e} .. {abscissa_hi:e})")]
    NotFound { beta_lo: f64, beta_hi: f64, abscissa_lo: f64, abscissa_hi: f64 },
    #[error("crossing eigenvalue at beta = {beta} is real ({eigenvalue}); not a Hopf crossing")]
    RealCrossing { beta: f64, eigenvalue: Complex64 },
    #[error("left/right eigenvector pairing {0:e} too small; eigenvalue not simple")]
    DegenerateEigenvector(f64),
    #[error("Hopf search needs lambda > 0")]
    ZeroLambda,
    #[error("invalid beta range [{0}, {1}]")]
    BadRange(f64, f64),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("step size underflow at t = {t} (h = {h:e}); problem may be stiff")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    BlowUp { t: f64 },
    #[error("positivity could not be kept after repeated step halving at t = {t}")]
    PositivityLost { t: f64 },
    #[error("invalid integration request: {0}")]
    InvalidInput(String),
}

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Structural,
    Domain,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Hopf(#[from] HopfError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Network(e) => match e {
                NetworkError::TooSmall(_) | NetworkError::NotSquare { .. } | NetworkError::NonFinite { .. } => {
                    ErrorKind::Structural
                }
                NetworkError::ShapeMismatch(_) => ErrorKind::Structural,
                NetworkError::Invalid(_) | NetworkError::InvalidParameter(_) => ErrorKind::Domain,
                NetworkError::PerronNoConvergence { .. } => ErrorKind::Numerical,
            },
            Error::Equilibrium(EquilibriumError::Shape { .. }) => ErrorKind::Structural,
            Error::Spectrum(SpectrumError::ParameterMismatch { .. }) => ErrorKind::Domain,
            Error::Hopf(HopfError::ZeroLambda | HopfError::BadRange(..)) => ErrorKind::Domain,
            Error::Dynamics(DynamicsError::InvalidInput(_)) => ErrorKind::Domain,
            _ => ErrorKind::Numerical,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
