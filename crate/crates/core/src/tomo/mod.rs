//! Homodyne tomography: quadrature statistics, sampling, maximum-likelihood
//! reconstruction, Wigner functions and bootstrap errors.

mod bootstrap;
mod dataset;
mod mle;
mod pdf;
mod squeezing;
mod wigner;

pub use bootstrap::{bootstrap, BootstrapResult, MIN_RESAMPLES};
pub use dataset::{PhaseBlock, QuadratureDataset, QuadratureRecord};
pub use mle::{mle_reconstruct, mle_reconstruct_from, Binning, StopRule, TomographyResult};
pub use pdf::{quadrature_moments, quadrature_pdf, sample_quadratures, QuadratureSampler};
pub use squeezing::{squeezing_levels, SqueezingLevels};
pub use wigner::{wigner, wigner_at, wigner_origin, WignerGrid};

use thiserror::Error;

use crate::fock::FockError;

/// Homodyne phases in degrees; 0° is the anti-squeezed and 90° the squeezed quadrature.
pub const LAB_PHASES_DEG: [f64; 8] = [-67.5, -45.0, -22.5, 0.0, 22.5, 45.0, 67.5, 90.0];

#[derive(Debug, Error)]
pub enum TomoError {
    #[error("need at least 2 distinct phases, got {0}")]
    InsufficientPhases(usize),
    #[error("maximum likelihood did not converge in {} iterations", .best.iterations)]
    NonConvergence { best: Box<TomographyResult> },
    #[error("dataset has no records at phase {0}°")]
    MissingPhase(f64),
    #[error("dataset has no shot-noise records")]
    MissingShotNoise,
    #[error("invalid tomography input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Fock(#[from] FockError),
}

pub type Result<T> = std::result::Result<T, TomoError>;
