use serde::{Deserialize, Serialize};

use super::dataset::sample_variance;
use super::{QuadratureDataset, Result, TomoError};

/// Quadrature noise relative to shot noise, both as positive dB magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingLevels {
    pub squeeze_db: f64,
    pub antisqueeze_db: f64,
}

/// Variance ratios at 90° (squeezed) and 0° (anti-squeezed) against the
/// shot-noise record.
pub fn squeezing_levels(data: &QuadratureDataset) -> Result<SqueezingLevels> {
    if data.shot_noise.len() < 2 {
        return Err(TomoError::MissingShotNoise);
    }
    let shot = sample_variance(&data.shot_noise);
    let db = |phase: f64| -> Result<f64> {
        let block = data.block(phase).filter(|b| b.xs.len() >= 2).ok_or(TomoError::MissingPhase(phase))?;
        Ok(10.0 * (sample_variance(&block.xs) / shot).log10())
    };
    Ok(SqueezingLevels { squeeze_db: -db(90.0)?, antisqueeze_db: db(0.0)? })
}
