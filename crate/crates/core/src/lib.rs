//! Coupled n-patch Brusselator networks.
//!
//! Patches exchange the two reactants through essentially nonnegative
//! coupling matrices with zero column sums. The crate computes Perron
//! vectors, the positive equilibrium, the spectrum of the linearization,
//! Hopf points in `beta`, and trajectories with a simple attractor test.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Dense numerical kernels read more clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod hopf;
pub mod linalg;
pub mod network;
pub mod spectrum;

pub use dynamics::{classify_attractor, integrate, AttractorOptions, AttractorVerdict, IntegrateOptions, Trajectory};
pub use equilibrium::{Equilibrium, ZerothOrderEquilibrium};
pub use error::{Error, ErrorKind, Result};
pub use hopf::{find_hopf, hopf_curve, AsymptoticHopf, HopfCurvePoint, HopfOptions, HopfPoint};
pub use network::{validate_coupling, CouplingMatrix, PatchNetwork, PerronPair, ValidationReport, Violation};
pub use spectrum::{classify, StabilityReport, StabilityVerdict, SpectrumReport};
