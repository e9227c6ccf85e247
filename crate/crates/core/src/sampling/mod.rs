//! SNSPD waveforms read out by optical sampling through a dual-output
//! modulator and a balanced photodetector, photon-class discrimination and
//! the calibration bench (conversion factor, jitter, method resolution).

mod bench;
mod calibration;
mod histogram;
mod pulse;
mod sampler;

pub use bench::{
    default_thresholds, draw_photon_numbers, run_bench, simulate_events, BenchConfig, BenchResult, EventRecord,
};
pub use calibration::{calibrate, classify_event, conversion_factor, estimate_jitter, JitterFit};
pub use histogram::SamplingHistogram;
pub use pulse::{synthesize_pulse, synthesize_pulse_with, PulseModel, TraceWindow, WaveformTrace};
pub use sampler::{optical_sample, optical_sample_noiseless, SamplerModel};

use thiserror::Error;

/// `FWHM = 2√(2 ln 2) σ` for a Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("sampling point {time:.3e} s outside trace [{start:.3e}, {end:.3e}] s")]
    OutOfWindow { time: f64, start: f64, end: f64 },
    #[error("degenerate histogram: {0}")]
    DegenerateHistogram(String),
    #[error("Gaussian fit failed: relative residual {residual:.3} exceeds {threshold}")]
    FitFailure { residual: f64, threshold: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, SamplingError>;
