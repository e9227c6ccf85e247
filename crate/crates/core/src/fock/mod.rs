//! Truncated Fock-space states, operators and channels for one and two modes.
//!
//! Conventions used throughout the crate:
//!
//! * `[x, p] = i`, so the vacuum quadrature variance is 1/2 and
//!   `x_θ = (a e^{-iθ} + a† e^{iθ}) / √2 = x cos θ + p sin θ`.
//! * The squeezing operator is `S(r) = exp[r/2 (a² − a†²)]`; for `r > 0` it
//!   squeezes `x`.
//! * The beamsplitter is the real orthogonal map
//!   `a† → t a† + ρ b†`, `b† → −ρ a† + t b†` with `t = √T`, `ρ = √(1−T)`.
//!   Every quantity computed downstream (photon statistics, heralding
//!   probabilities, Wigner values) is independent of this phase choice.

mod density;
mod loss;
mod two_mode;
mod vector;

pub use density::{photon_number_distribution, DensityMatrixJson, FockDensityMatrix};
pub use loss::{apply_loss, LossChannel};
pub use two_mode::{beamsplitter, TwoModeFockState};
pub use vector::{annihilate, squeezed_vacuum, FockVector};

use thiserror::Error;

/// Default Fock cutoff for state generation.
pub const GENERATION_CUTOFF: usize = 30;
/// Default Fock cutoff for reconstructed states.
pub const TOMOGRAPHY_CUTOFF: usize = 14;
/// Norm leakage tolerated before truncation becomes a hard error.
pub const DEFAULT_LEAKAGE_TOLERANCE: f64 = 1e-6;

/// Largest squeezing magnitude accepted by [`squeezed_vacuum`].
pub const MAX_SQUEEZING: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("truncation leakage {leakage:.3e} exceeds tolerance {tolerance:.3e}")]
    Truncation { leakage: f64, tolerance: f64 },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: expected cutoff {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, FockError>;

/// A state together with the probability mass lost to truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncated<T> {
    pub state: T,
    /// `1 − norm²` of the truncated result relative to the exact one.
    pub leakage: f64,
}

/// Binomial coefficient as `f64`, accumulated multiplicatively.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}
