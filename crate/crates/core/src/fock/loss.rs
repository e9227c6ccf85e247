use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{binomial, FockDensityMatrix, FockError, Result};

/// Pure-loss channel with transmittance `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossChannel {
    efficiency: f64,
}

impl LossChannel {
    pub fn new(efficiency: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(FockError::InvalidParameter(format!("loss-channel efficiency {efficiency} outside [0, 1]")));
        }
        Ok(Self { efficiency })
    }

    pub fn identity() -> Self {
        Self { efficiency: 1.0 }
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// Sequential composition; pure loss forms a semigroup under multiplication.
    pub fn then(self, next: LossChannel) -> LossChannel {
        LossChannel { efficiency: self.efficiency * next.efficiency }
    }

    /// `P(k lost | n)` table: `weights[n][k] = C(n,k) η^{n−k} (1−η)^k`.
    fn loss_weights(&self, cutoff: usize) -> Vec<Vec<f64>> {
        let eta = self.efficiency;
        (0..=cutoff)
            .map(|n| (0..=n).map(|k| binomial(n, k) * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).collect())
            .collect()
    }
}

/// `ρ' = Σ_k A_k ρ A_k†` with binomial Kraus operators
/// `A_k = Σ_n √(C(n,k) η^{n−k} (1−η)^k) |n−k⟩⟨n|`.
pub fn apply_loss(state: &FockDensityMatrix, channel: &LossChannel) -> FockDensityMatrix {
    if channel.efficiency == 1.0 {
        return state.clone();
    }
    let d = state.dim();
    let w = channel.loss_weights(d - 1);
    let rho = state.entries();
    let out = DMatrix::from_fn(d, d, |m, n| {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..d - m.max(n) {
            let amp = (w[m + k][k] * w[n + k][k]).sqrt();
            acc += rho[(m + k, n + k)] * amp;
        }
        acc
    });
    FockDensityMatrix::from_entries_unchecked(out).expect("square matrix in, square matrix out")
}
