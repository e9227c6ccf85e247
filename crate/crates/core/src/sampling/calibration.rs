use serde::{Deserialize, Serialize};

use super::{Result, SamplingError, SamplingHistogram, FWHM_PER_SIGMA};

/// Number of thresholds strictly below `peak_voltage`.
pub fn classify_event(peak_voltage: f64, thresholds: &[f64]) -> usize {
    thresholds.partition_point(|&t| t < peak_voltage)
}

/// Volts per second from a voltage shift produced by a known delay.
pub fn conversion_factor(shift_volts: f64, delay_seconds: f64) -> f64 {
    shift_volts.abs() / delay_seconds
}

fn check_single_mode(h: &SamplingHistogram, which: &str) -> Result<()> {
    match h.mode_count() {
        0 => Err(SamplingError::DegenerateHistogram(format!("{which} histogram is empty"))),
        1 => Ok(()),
        k => Err(SamplingError::DegenerateHistogram(format!("{which} histogram has {k} modes"))),
    }
}

/// `|median(with) − median(without)| / delay`.
pub fn calibrate(
    events_no_delay: &SamplingHistogram,
    events_with_delay: &SamplingHistogram,
    delay: f64,
) -> Result<f64> {
    if !(delay > 0.0) {
        return Err(SamplingError::InvalidModel(format!("delay {delay} must be positive")));
    }
    check_single_mode(events_no_delay, "no-delay")?;
    check_single_mode(events_with_delay, "delayed")?;
    let shift = events_with_delay.median()? - events_no_delay.median()?;
    let floor = events_no_delay.max_bin_width().max(events_with_delay.max_bin_width());
    if shift.abs() < floor {
        return Err(SamplingError::DegenerateHistogram(format!(
            "median shift {shift:.3e} V is below the bin width {floor:.3e} V"
        )));
    }
    Ok(conversion_factor(shift, delay))
}

/// Least-squares Gaussian `a·exp(−(v−μ)²/2σ²)` fitted to histogram counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterFit {
    pub amplitude: f64,
    pub mean: f64,
    pub sigma: f64,
    /// `‖counts − fit‖ / ‖counts‖`.
    pub residual: f64,
}

impl JitterFit {
    pub const DEFAULT_MAX_RESIDUAL: f64 = 0.2;

    pub fn fwhm(&self) -> f64 {
        FWHM_PER_SIGMA * self.sigma
    }

    /// Levenberg–Marquardt from moment estimates. Histograms with fewer
    /// than three occupied bins cannot resolve a width; they are returned
    /// with `sigma` set to one bin width over the FWHM factor, i.e. an
    /// FWHM of exactly one bin.
    pub fn fit(hist: &SamplingHistogram, max_residual: f64) -> Result<Self> {
        let total = hist.total() as f64;
        if total == 0.0 {
            return Err(SamplingError::DegenerateHistogram("histogram is empty".into()));
        }
        let xs = hist.centers();
        let ys: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
        let mean = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / total;
        if ys.iter().filter(|&&y| y > 0.0).count() < 3 {
            return Ok(Self {
                amplitude: ys.iter().copied().fold(0.0, f64::max),
                mean,
                sigma: hist.max_bin_width() / FWHM_PER_SIGMA,
                residual: 0.0,
            });
        }
        let var = xs.iter().zip(&ys).map(|(x, y)| y * (x - mean).powi(2)).sum::<f64>() / total;
        let mut p = [ys.iter().copied().fold(0.0, f64::max), mean, var.sqrt().max(1e-12)];
        let sse = |p: &[f64; 3]| -> f64 {
            xs.iter()
                .zip(&ys)
                .map(|(x, y)| {
                    let m = p[0] * (-(x - p[1]).powi(2) / (2.0 * p[2] * p[2])).exp();
                    (y - m).powi(2)
                })
                .sum()
        };
        let mut cost = sse(&p);
        let mut lambda = 1e-3;
        for _ in 0..200 {
            // normal equations JᵀJ δ = Jᵀr with Marquardt damping on the diagonal
            let mut jtj = [[0.0; 3]; 3];
            let mut jtr = [0.0; 3];
            for (x, y) in xs.iter().zip(&ys) {
                let z = (x - p[1]) / p[2];
                let e = (-0.5 * z * z).exp();
                let m = p[0] * e;
                let j = [e, m * z / p[2], m * z * z / p[2]];
                let r = y - m;
                for a in 0..3 {
                    jtr[a] += j[a] * r;
                    for b in 0..3 {
                        jtj[a][b] += j[a] * j[b];
                    }
                }
            }
            let mut improved = false;
            while lambda < 1e12 {
                let mut m = jtj;
                for (a, row) in m.iter_mut().enumerate() {
                    row[a] *= 1.0 + lambda;
                }
                let Some(delta) = solve3(m, jtr) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial = [p[0] + delta[0], p[1] + delta[1], (p[2] + delta[2]).abs().max(1e-15)];
                let trial_cost = sse(&trial);
                if trial_cost < cost {
                    let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                    p = trial;
                    cost = trial_cost;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = rel > 1e-12;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        let norm = ys.iter().map(|y| y * y).sum::<f64>().sqrt();
        let span = hist.bin_edges[hist.bin_edges.len() - 1] - hist.bin_edges[0];
        // a width beyond the histogram span means no peak was found
        let residual = if p[2] > span { f64::INFINITY } else { cost.sqrt() / norm };
        if residual > max_residual {
            return Err(SamplingError::FitFailure { residual, threshold: max_residual });
        }
        Ok(Self { amplitude: p[0], mean: p[1], sigma: p[2], residual })
    }
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d.abs() < f64::MIN_POSITIVE || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for row in 0..3 {
            mk[row][k] = b[row];
        }
        *o = det(&mk) / d;
    }
    Some(out)
}

/// FWHM of the fitted histogram width converted to seconds.
pub fn estimate_jitter(histogram: &SamplingHistogram, conversion_factor: f64) -> Result<f64> {
    if !(conversion_factor > 0.0) {
        return Err(SamplingError::InvalidModel(format!("conversion factor {conversion_factor} must be positive")));
    }
    Ok(JitterFit::fit(histogram, JitterFit::DEFAULT_MAX_RESIDUAL)?.fwhm() / conversion_factor)
}
