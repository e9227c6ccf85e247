use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PhaseBlock, QuadratureDataset, Result, TomoError};
use crate::seed::{streams, task_rng};

/// Below this many resamples the sigmas are reported but flagged.
pub const MIN_RESAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Standard deviation of each estimator output across resamples.
    pub sigmas: Vec<f64>,
    pub n_resamples: usize,
    /// Fewer than [`MIN_RESAMPLES`] resamples.
    pub underpowered: bool,
    /// A single resample, so every sigma is 0.
    pub degenerate: bool,
}

fn resample<R: Rng>(xs: &[f64], rng: &mut R) -> Vec<f64> {
    (0..xs.len()).map(|_| xs[rng.random_range(0..xs.len())]).collect()
}

/// Nonparametric bootstrap: each phase block and the shot-noise record are
/// resampled with replacement, and `estimator` is rerun on every replica.
/// Replica `i` draws from RNG task `(seed, BOOTSTRAP, i)`, so the result does
/// not depend on the thread count.
pub fn bootstrap<F>(data: &QuadratureDataset, n_resamples: usize, seed: u64, estimator: F) -> Result<BootstrapResult>
where
    F: Fn(&QuadratureDataset) -> Result<Vec<f64>> + Sync,
{
    if n_resamples == 0 {
        return Err(TomoError::InvalidInput("bootstrap needs at least one resample".into()));
    }
    let outputs: Vec<Vec<f64>> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, streams::BOOTSTRAP, i as u64);
            let replica = QuadratureDataset {
                blocks: data
                    .blocks
                    .iter()
                    .map(|b| PhaseBlock { phase_deg: b.phase_deg, xs: resample(&b.xs, &mut rng) })
                    .collect(),
                shot_noise: resample(&data.shot_noise, &mut rng),
                seed: data.seed,
            };
            estimator(&replica)
        })
        .collect::<Result<_>>()?;
    let width = outputs[0].len();
    if outputs.iter().any(|o| o.len() != width) {
        return Err(TomoError::InvalidInput("estimator returned varying lengths".into()));
    }
    let b = n_resamples as f64;
    let sigmas = (0..width)
        .map(|k| {
            if n_resamples < 2 {
                return 0.0;
            }
            let mean = outputs.iter().map(|o| o[k]).sum::<f64>() / b;
            (outputs.iter().map(|o| (o[k] - mean).powi(2)).sum::<f64>() / (b - 1.0)).sqrt()
        })
        .collect();
    Ok(BootstrapResult { sigmas, n_resamples, underpowered: n_resamples < MIN_RESAMPLES, degenerate: n_resamples == 1 })
}
