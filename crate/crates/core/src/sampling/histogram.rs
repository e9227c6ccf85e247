use serde::{Deserialize, Serialize};

use super::{Result, SamplingError};

/// Voltage histogram; `counts[i]` covers `[bin_edges[i], bin_edges[i+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Photon class each contributing event was assigned, when tracked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

/// Span used when every value is identical.
const MIN_SPAN: f64 = 1e-3;

impl SamplingHistogram {
    /// `bins` equal bins from the smallest to the largest value.
    pub fn from_values(values: &[f64], bins: usize) -> Self {
        assert!(bins >= 1);
        if values.is_empty() {
            return Self::with_edges((0..=bins).map(|i| i as f64 * MIN_SPAN / bins as f64).collect(), &[]);
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi - lo < MIN_SPAN * 1e-6 {
            (lo - MIN_SPAN / 2.0, hi + MIN_SPAN / 2.0)
        } else {
            // widen a hair so the maximum lands inside the last bin
            let pad = (hi - lo) * 1e-9;
            (lo, hi + pad)
        };
        let step = (hi - lo) / bins as f64;
        Self::with_edges((0..=bins).map(|i| lo + i as f64 * step).collect(), values)
    }

    /// Fixed edges; values outside are dropped.
    pub fn with_edges(bin_edges: Vec<f64>, values: &[f64]) -> Self {
        assert!(bin_edges.len() >= 2);
        let mut counts = vec![0u64; bin_edges.len() - 1];
        for &v in values {
            let i = bin_edges.partition_point(|&e| e <= v);
            if i >= 1 && i < bin_edges.len() {
                counts[i - 1] += 1;
            }
        }
        Self { bin_edges, counts, labels: None }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn max_bin_width(&self) -> f64 {
        self.bin_edges.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Median with linear interpolation inside the bin that crosses half the mass.
    pub fn median(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(SamplingError::DegenerateHistogram("histogram is empty".into()));
        }
        let half = total as f64 / 2.0;
        let mut acc = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            let next = acc + c as f64;
            if next >= half && c > 0 {
                let frac = (half - acc) / c as f64;
                return Ok(self.bin_edges[i] + frac * (self.bin_edges[i + 1] - self.bin_edges[i]));
            }
            acc = next;
        }
        unreachable!("half the mass lies somewhere")
    }

    /// Number of well-separated peaks after light smoothing. A dip counts as
    /// a separation when it falls below half of the smaller neighbouring peak.
    pub fn mode_count(&self) -> usize {
        let n = self.counts.len();
        let smooth: Vec<f64> = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(2);
                let hi = (i + 2).min(n - 1);
                self.counts[lo..=hi].iter().sum::<u64>() as f64 / (hi - lo + 1) as f64
            })
            .collect();
        let top = smooth.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            return 0;
        }
        let mut modes = 0;
        // height of the current peak and the lowest point after it
        let mut state: Option<(f64, f64)> = None;
        for &v in &smooth {
            state = match state {
                None if v >= 0.2 * top => {
                    modes = 1;
                    Some((v, v))
                }
                None => None,
                Some((p, dip)) if dip < 0.5 * p && v >= 0.2 * top && dip < 0.5 * v => {
                    modes += 1;
                    Some((v, v))
                }
                Some((p, _)) if v > p => Some((v, v)),
                Some((p, dip)) => Some((p, dip.min(v))),
            };
        }
        modes
    }
}
