//! Simulation of optical spin initialisation and readout for a negatively
//! charged quantum dot coupled to a single-mode or bi-modal optical cavity
//! in a Voigt-geometry magnetic field.
//!
//! The crate models the QD as a 4-level system (two spin ground states, two
//! trion states) whose optical transitions couple to up to two linearly
//! polarised cavity modes. Dynamics follow a Lindblad master equation with
//! cavity leakage, spontaneous emission, and optional pure dephasing.
//!
//! Internal unit system: time in ns, rates and angular frequencies in
//! rad/ns. Configuration-facing interfaces accept ordinary frequencies in
//! GHz (values quoted as `f/2pi`) and convert by `2 pi`.

pub mod config;
pub mod dynamics;
pub mod experiments;
pub mod hilbert;
pub mod linalg;
pub mod liouville;
pub mod metrics;
pub mod model;
pub mod output;
pub mod verify;

pub use hilbert::{DensityMatrix, HilbertSpace, Operator};
pub use liouville::Superoperator;
pub use model::{CavityMode, DriveSpec, Model, Polarization, PulseEnvelope, SystemParams};

use thiserror::Error;

pub type C64 = num_complex::Complex64;
pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Convert an ordinary frequency in GHz (a value quoted as `f/2pi`) to an
/// angular frequency in rad/ns.
pub fn ghz(f: f64) -> f64 {
    TWO_PI * f
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operators act on different Hilbert spaces")]
    SpaceMismatch,
    #[error("factor index {index} out of range for space with {n_factors} factors")]
    FactorOutOfRange { index: usize, n_factors: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("density matrix trace deviates from 1 by {deviation:.3e}")]
    TraceDeviation { deviation: f64 },
    #[error("density matrix has negative eigenvalue {min_eig:.3e}")]
    NotPositive { min_eig: f64 },
    #[error("steady state is not unique: Liouvillian nullspace dimension >= 2")]
    DegenerateSteadyState,
    #[error("integrator step size underflow at t = {t} ns")]
    StepSizeUnderflow { t: f64 },
    #[error("trajectory sample grid too coarse: refinement changed result by {change:.3e} (relative)")]
    GridTooCoarse { change: f64 },
    #[error("cavity mode with polarization {0:?} not present in model")]
    ModeAbsent(model::Polarization),
    #[error("duplicate cavity polarization {0:?}")]
    DuplicatePolarization(model::Polarization),
    #[error("linear algebra error: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
