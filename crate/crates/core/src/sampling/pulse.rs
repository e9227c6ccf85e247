use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Result, SamplingError, FWHM_PER_SIGMA};
use crate::seed;

/// SNSPD output pulse: linear rise whose slope grows with the photon
/// number, saturation at a common amplitude, exponential fall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseModel {
    /// Volts.
    pub amplitude: f64,
    /// Rising-edge slope of a one-photon pulse, V/s.
    pub rise_slope_1ph: f64,
    /// Slope multiplier for `n = 1, 2, …`; `n` itself when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_multipliers: Option<Vec<f64>>,
    /// Seconds.
    pub fall_time: f64,
    /// Seconds, FWHM of the Gaussian arrival-time spread.
    pub jitter_fwhm: f64,
    /// Volts rms, independent per trace sample.
    pub electrical_noise_rms: f64,
}

impl Default for PulseModel {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            // full amplitude after 400 ps for one photon
            rise_slope_1ph: 1.0 / 400e-12,
            slope_multipliers: None,
            fall_time: 20e-9,
            jitter_fwhm: 60.3e-12,
            electrical_noise_rms: 2e-3,
        }
    }
}

impl PulseModel {
    pub fn validate(&self) -> Result<()> {
        let positive =
            [("amplitude", self.amplitude), ("rise_slope_1ph", self.rise_slope_1ph), ("fall_time", self.fall_time)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SamplingError::InvalidModel(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [("jitter_fwhm", self.jitter_fwhm), ("electrical_noise_rms", self.electrical_noise_rms)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SamplingError::InvalidModel(format!("{name} = {v} must be non-negative")));
            }
        }
        if let Some(m) = &self.slope_multipliers {
            if m.is_empty() || m[0] <= 0.0 || m.windows(2).any(|w| w[1] <= w[0]) {
                return Err(SamplingError::InvalidModel(
                    "slope multipliers must be positive and strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn slope_multiplier(&self, n: usize) -> Result<f64> {
        match &self.slope_multipliers {
            None => Ok(n as f64),
            Some(m) => m
                .get(n.wrapping_sub(1))
                .copied()
                .ok_or_else(|| SamplingError::InvalidModel(format!("no slope multiplier for {n} photons"))),
        }
    }

    /// Noise-free voltage at time `t` of an `n`-photon pulse starting at `t_j`.
    pub fn voltage(&self, n: usize, t_j: f64, t: f64) -> Result<f64> {
        if t < t_j {
            return Ok(0.0);
        }
        let slope = self.slope_multiplier(n)? * self.rise_slope_1ph;
        let rise_end = t_j + self.amplitude / slope;
        let ramp = (slope * (t - t_j)).min(self.amplitude);
        Ok(ramp * (-(t - rise_end).max(0.0) / self.fall_time).exp())
    }

    pub fn jitter_sigma(&self) -> f64 {
        self.jitter_fwhm / FWHM_PER_SIGMA
    }
}

/// Uniformly sampled time axis `t0 + i·dt`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceWindow {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl Default for TraceWindow {
    /// 100 ns at 1 ps, starting 1 ns before the nominal arrival.
    fn default() -> Self {
        Self { t0: -1e-9, dt: 1e-12, len: 100_000 }
    }
}

impl TraceWindow {
    /// Window covering `[start, end]` at step `dt`.
    pub fn spanning(start: f64, end: f64, dt: f64) -> Self {
        Self { t0: start, dt, len: ((end - start) / dt).ceil() as usize + 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformTrace {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl WaveformTrace {
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.samples.len().saturating_sub(1))
    }

    /// A trace with the detector output blocked: all zeros.
    pub fn blocked(window: &TraceWindow) -> Self {
        Self { t0: window.t0, dt: window.dt, samples: vec![0.0; window.len] }
    }
}

/// Draws one pulse with the arrival jitter and per-sample noise taken from `rng`.
pub fn synthesize_pulse_with<R: Rng + ?Sized>(
    model: &PulseModel,
    n_photons: usize,
    window: &TraceWindow,
    rng: &mut R,
) -> Result<WaveformTrace> {
    if n_photons == 0 {
        return Err(SamplingError::InvalidModel("a pulse needs at least one photon".into()));
    }
    if !(window.dt > 0.0) || window.len == 0 {
        return Err(SamplingError::InvalidModel("trace window must have dt > 0 and samples".into()));
    }
    let t_j = if model.jitter_fwhm > 0.0 {
        Normal::new(0.0, model.jitter_sigma()).expect("positive sigma").sample(rng)
    } else {
        0.0
    };
    let noise = (model.electrical_noise_rms > 0.0)
        .then(|| Normal::new(0.0, model.electrical_noise_rms).expect("positive sigma"));
    let mut samples = Vec::with_capacity(window.len);
    for i in 0..window.len {
        let t = window.t0 + i as f64 * window.dt;
        let mut v = model.voltage(n_photons, t_j, t)?;
        if let Some(nd) = &noise {
            v += nd.sample(rng);
        }
        samples.push(v);
    }
    Ok(WaveformTrace { t0: window.t0, dt: window.dt, samples })
}

pub fn synthesize_pulse(
    model: &PulseModel,
    n_photons: usize,
    window: &TraceWindow,
    rng_seed: u64,
) -> Result<WaveformTrace> {
    synthesize_pulse_with(model, n_photons, window, &mut seed::rng(rng_seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quiet() -> PulseModel {
        PulseModel { jitter_fwhm: 0.0, electrical_noise_rms: 0.0, ..PulseModel::default() }
    }

    #[test]
    fn half_amplitude_crossing() {
        let m = quiet();
        let w = TraceWindow { t0: 0.0, dt: 1e-12, len: 1001 };
        let trace = synthesize_pulse(&m, 1, &w, 0).unwrap();
        let expected = m.amplitude / (2.0 * m.rise_slope_1ph);
        // first sample at or above A/2
        let i = trace.samples.iter().position(|&v| v >= 0.5 * m.amplitude).unwrap();
        assert_abs_diff_eq!(trace.time(i), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(m.voltage(1, 0.0, expected).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn two_photons_rise_twice_as_fast() {
        let m = quiet();
        for t in [10e-12, 60e-12, 150e-12] {
            let v1 = m.voltage(1, 0.0, t).unwrap();
            let v2 = m.voltage(2, 0.0, t).unwrap();
            assert_abs_diff_eq!(v2, 2.0 * v1, epsilon = 1e-12);
        }
    }

    #[test]
    fn saturates_then_decays() {
        let m = quiet();
        assert_eq!(m.voltage(1, 0.0, 400e-12).unwrap(), 1.0);
        let late = m.voltage(1, 0.0, 400e-12 + m.fall_time).unwrap();
        assert_abs_diff_eq!(late, (-1.0f64).exp(), epsilon = 1e-12);
        assert_eq!(m.voltage(3, 0.0, -1e-12).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let w = TraceWindow { t0: 0.0, dt: 1e-12, len: 300 };
        let m = PulseModel::default();
        assert_eq!(synthesize_pulse(&m, 1, &w, 5).unwrap(), synthesize_pulse(&m, 1, &w, 5).unwrap());
        assert_ne!(synthesize_pulse(&m, 1, &w, 5).unwrap(), synthesize_pulse(&m, 1, &w, 6).unwrap());
        assert!(synthesize_pulse(&m, 0, &w, 5).is_err());
    }

    #[test]
    fn validation() {
        assert!(PulseModel::default().validate().is_ok());
        let bad = PulseModel { slope_multipliers: Some(vec![1.0, 1.0]), ..PulseModel::default() };
        assert!(bad.validate().is_err());
        let custom = PulseModel { slope_multipliers: Some(vec![1.0, 1.8]), ..PulseModel::default() };
        assert_eq!(custom.slope_multiplier(2).unwrap(), 1.8);
        assert!(custom.slope_multiplier(3).is_err());
    }
}
