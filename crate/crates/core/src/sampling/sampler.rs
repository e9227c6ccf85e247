use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Result, SamplingError, WaveformTrace, FWHM_PER_SIGMA};

/// Dual-output Mach–Zehnder modulator gated by an optical pulse, read out by
/// a balanced photodetector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerModel {
    /// Volts.
    pub v_pi: f64,
    /// Volts.
    pub bias_voltage: f64,
    /// Seconds, optical gate duration.
    pub gate_fwhm: f64,
    /// Volts, BPD output at full swing.
    pub optical_power_scale: f64,
    /// Volts rms.
    pub bpd_noise_rms: f64,
}

impl Default for SamplerModel {
    fn default() -> Self {
        Self {
            v_pi: 3.0,
            // puts the half-amplitude point of the rising edge at the balanced null
            bias_voltage: -0.5,
            gate_fwhm: 2e-12,
            optical_power_scale: 1.84,
            bpd_noise_rms: 3.89e-3,
        }
    }
}

impl SamplerModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("v_pi", self.v_pi), ("gate_fwhm", self.gate_fwhm), ("optical_power_scale", self.optical_power_scale)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SamplingError::InvalidModel(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.bpd_noise_rms >= 0.0) || !self.bias_voltage.is_finite() {
            return Err(SamplingError::InvalidModel("bad BPD noise or bias".into()));
        }
        Ok(())
    }

    /// Balanced output for gated voltage `v`.
    pub fn transfer(&self, v: f64) -> f64 {
        self.optical_power_scale * (PI * (v + self.bias_voltage) / self.v_pi).sin()
    }

    /// `d(transfer)/dv`.
    pub fn transfer_gain(&self, v: f64) -> f64 {
        self.optical_power_scale * PI / self.v_pi * (PI * (v + self.bias_voltage) / self.v_pi).cos()
    }
}

/// Trace voltage averaged with a normalized Gaussian gate centred on `t`.
fn gated_voltage(trace: &WaveformTrace, gate_fwhm: f64, t: f64) -> Result<f64> {
    let sigma = gate_fwhm / FWHM_PER_SIGMA;
    let reach = 4.0 * sigma;
    let (start, end) = (trace.t0, trace.end());
    if t - reach < start - 1e-18 || t + reach > end + 1e-18 {
        return Err(SamplingError::OutOfWindow { time: t, start, end });
    }
    let first = ((t - reach - trace.t0) / trace.dt).floor().max(0.0) as usize;
    let last = (((t + reach - trace.t0) / trace.dt).ceil() as usize).min(trace.samples.len() - 1);
    let (mut acc, mut norm) = (0.0, 0.0);
    for i in first..=last {
        let z = (trace.time(i) - t) / sigma;
        let w = (-0.5 * z * z).exp();
        acc += w * trace.samples[i];
        norm += w;
    }
    Ok(acc / norm)
}

/// Balanced-detector output without BPD noise.
pub fn optical_sample_noiseless(
    trace: &WaveformTrace,
    sampler: &SamplerModel,
    sample_time: f64,
    rf_delay: f64,
) -> Result<f64> {
    let v = gated_voltage(trace, sampler.gate_fwhm, sample_time + rf_delay)?;
    Ok(sampler.transfer(v))
}

pub fn optical_sample<R: Rng + ?Sized>(
    trace: &WaveformTrace,
    sampler: &SamplerModel,
    sample_time: f64,
    rf_delay: f64,
    rng: &mut R,
) -> Result<f64> {
    let clean = optical_sample_noiseless(trace, sampler, sample_time, rf_delay)?;
    if sampler.bpd_noise_rms > 0.0 {
        Ok(clean + Normal::new(0.0, sampler.bpd_noise_rms).expect("positive sigma").sample(rng))
    } else {
        Ok(clean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{synthesize_pulse, PulseModel, TraceWindow};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn flat(v: f64) -> WaveformTrace {
        WaveformTrace { t0: 0.0, dt: 1e-12, samples: vec![v; 100] }
    }

    fn quiet() -> SamplerModel {
        SamplerModel { bpd_noise_rms: 0.0, ..SamplerModel::default() }
    }

    #[test]
    fn balanced_null_and_extremum() {
        let s = SamplerModel { bias_voltage: 0.0, ..quiet() };
        assert_abs_diff_eq!(optical_sample_noiseless(&flat(0.0), &s, 50e-12, 0.0).unwrap(), 0.0);
        let out = optical_sample_noiseless(&flat(s.v_pi / 2.0), &s, 50e-12, 0.0).unwrap();
        assert_abs_diff_eq!(out, s.optical_power_scale, epsilon = 1e-12);
    }

    #[test]
    fn out_of_window() {
        let err = optical_sample_noiseless(&flat(0.0), &quiet(), 200e-12, 0.0).unwrap_err();
        assert!(matches!(err, SamplingError::OutOfWindow { .. }));
        assert!(optical_sample_noiseless(&flat(0.0), &quiet(), 50e-12, 60e-12).is_err());
    }

    #[test]
    fn gate_preserves_linear_ramp() {
        let trace = WaveformTrace { t0: 0.0, dt: 1e-12, samples: (0..100).map(|i| 0.01 * i as f64).collect() };
        // symmetric gate on a line returns the line's value at the centre
        assert_abs_diff_eq!(gated_voltage(&trace, 2e-12, 40.3e-12).unwrap(), 0.403, epsilon = 1e-6);
    }

    #[test]
    fn delay_shift_follows_local_slope() {
        let pulse = PulseModel { jitter_fwhm: 0.0, electrical_noise_rms: 0.0, ..PulseModel::default() };
        let s = quiet();
        let w = TraceWindow::spanning(100e-12, 300e-12, 1e-12);
        let trace = synthesize_pulse(&pulse, 1, &w, 0).unwrap();
        let a = optical_sample_noiseless(&trace, &s, 200e-12, 0.0).unwrap();
        let b = optical_sample_noiseless(&trace, &s, 200e-12, 41.7e-12).unwrap();
        let v0 = 200e-12 * pulse.rise_slope_1ph;
        let dv = 41.7e-12 * pulse.rise_slope_1ph;
        assert_abs_diff_eq!(b - a, s.transfer(v0 + dv) - s.transfer(v0), epsilon = 1e-6);
        // first order: slope · delay · gain
        let linear = pulse.rise_slope_1ph * 41.7e-12 * s.transfer_gain(v0);
        assert!(((b - a) / linear - 1.0).abs() < 0.01);
        assert_abs_diff_eq!(a, 0.0, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn monotone_on_half_period(v1 in -1.9f64..2.9, v2 in -1.9f64..2.9) {
            // |v + bias| < v_pi/2 ⇔ v ∈ (−1, 2) for the defaults; stay inside
            let s = quiet();
            let (lo, hi) = (v1.min(v2).clamp(-0.99, 1.99), v1.max(v2).clamp(-0.99, 1.99));
            prop_assert!(s.transfer(lo) <= s.transfer(hi));
        }
    }
}
