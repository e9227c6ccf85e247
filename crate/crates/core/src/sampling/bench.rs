use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    calibrate, classify_event, estimate_jitter, optical_sample, synthesize_pulse_with, PulseModel, Result,
    SamplerModel, SamplingHistogram, TraceWindow, WaveformTrace,
};
use crate::seed::{streams, task_rng};

/// Parameters of the timing-calibration bench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub events: usize,
    /// Seconds after the nominal arrival at which the gate samples the edge.
    pub sample_time: f64,
    /// Seconds of extra RF delay for the calibration run.
    pub delay: f64,
    pub bins: usize,
    /// Trace resolution; traces only cover the gate neighbourhood.
    pub trace_dt: f64,
    pub trace_margin: f64,
    /// Photon-number mix `P(n = k + 1)` for the labelled event run.
    pub photon_probs: Vec<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            events: 100_000,
            sample_time: 200e-12,
            delay: 41.7e-12,
            bins: 200,
            trace_dt: 1e-12,
            trace_margin: 20e-12,
            photon_probs: vec![0.85, 0.15],
        }
    }
}

impl BenchConfig {
    fn window(&self, rf_delay: f64) -> TraceWindow {
        TraceWindow::spanning(
            self.sample_time - self.trace_margin,
            self.sample_time + rf_delay + self.trace_margin,
            self.trace_dt,
        )
    }
}

/// One sampled detector event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_index: u64,
    /// Photons in the pulse; 0 for a blocked detector.
    pub n_true: usize,
    /// Balanced-detector output at the sampling point, volts.
    pub peak_voltage: f64,
    pub class: usize,
}

/// Samples `photon_numbers.len()` events. Event `i` draws everything from
/// RNG task `(seed, stream, i)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_events(
    pulse: &PulseModel,
    sampler: &SamplerModel,
    config: &BenchConfig,
    photon_numbers: &[usize],
    rf_delay: f64,
    thresholds: &[f64],
    seed: u64,
    stream: u64,
) -> Result<Vec<EventRecord>> {
    pulse.validate()?;
    sampler.validate()?;
    let window = config.window(rf_delay);
    photon_numbers
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut rng = task_rng(seed, stream, i as u64);
            let trace = if n == 0 {
                WaveformTrace::blocked(&window)
            } else {
                synthesize_pulse_with(pulse, n, &window, &mut rng)?
            };
            let v = optical_sample(&trace, sampler, config.sample_time, rf_delay, &mut rng)?;
            Ok(EventRecord { event_index: i as u64, n_true: n, peak_voltage: v, class: classify_event(v, thresholds) })
        })
        .collect()
}

/// Photon numbers drawn from `probs[k]` for `n = k + 1`, one task per event.
pub fn draw_photon_numbers(probs: &[f64], count: usize, seed: u64) -> Vec<usize> {
    let total: f64 = probs.iter().sum();
    (0..count)
        .map(|i| {
            let u = task_rng(seed, streams::EVENTS_CLASSES, i as u64).random::<f64>() * total;
            let mut acc = 0.0;
            for (k, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return k + 1;
                }
            }
            probs.len()
        })
        .collect()
}

/// Midpoints between the noise-free outputs of successive photon numbers
/// at the sampling point, up to `max_n`. Numbers whose outputs coincide
/// (saturated edges) are not separable and end the list.
pub fn default_thresholds(
    pulse: &PulseModel,
    sampler: &SamplerModel,
    sample_time: f64,
    max_n: usize,
) -> Result<Vec<f64>> {
    let mut outs = Vec::new();
    for n in 1..=max_n {
        outs.push(sampler.transfer(pulse.voltage(n, 0.0, sample_time)?));
    }
    Ok(outs.windows(2).take_while(|w| w[1] > w[0] + 1e-9).map(|w| 0.5 * (w[0] + w[1])).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    /// V/s.
    pub conversion_factor: f64,
    /// Seconds FWHM.
    pub jitter_fwhm: f64,
    /// Seconds FWHM of the blocked-signal histogram.
    pub resolution_fwhm: f64,
    pub delay: f64,
    pub no_delay: SamplingHistogram,
    pub with_delay: SamplingHistogram,
    pub blocked: SamplingHistogram,
}

/// One-photon events with and without the calibration delay, plus a run
/// with the detector blocked.
pub fn run_bench(pulse: &PulseModel, sampler: &SamplerModel, config: &BenchConfig, seed: u64) -> Result<BenchResult> {
    let ones = vec![1; config.events];
    let zeros = vec![0; config.events];
    let values = |n: &[usize], delay: f64, stream: u64| -> Result<Vec<f64>> {
        Ok(simulate_events(pulse, sampler, config, n, delay, &[], seed, stream)?
            .into_iter()
            .map(|e| e.peak_voltage)
            .collect())
    };
    let no_delay = SamplingHistogram::from_values(&values(&ones, 0.0, streams::EVENTS_NO_DELAY)?, config.bins);
    let with_delay = SamplingHistogram::from_values(&values(&ones, config.delay, streams::EVENTS_DELAY)?, config.bins);
    let blocked = SamplingHistogram::from_values(&values(&zeros, 0.0, streams::EVENTS_BLOCKED)?, config.bins);
    let conversion_factor = calibrate(&no_delay, &with_delay, config.delay)?;
    Ok(BenchResult {
        conversion_factor,
        jitter_fwhm: estimate_jitter(&no_delay, conversion_factor)?,
        resolution_fwhm: estimate_jitter(&blocked, conversion_factor)?,
        delay: config.delay,
        no_delay,
        with_delay,
        blocked,
    })
}
