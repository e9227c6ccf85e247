use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{FockError, FockVector, Result, Truncated};

/// Pure two-mode state `Σ c_{n,m} |n⟩_signal |m⟩_idler`, both modes cut at
/// the same `cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeFockState {
    amplitudes: DMatrix<Complex64>,
}

impl TwoModeFockState {
    pub fn new(amplitudes: DMatrix<Complex64>) -> Result<Self> {
        if amplitudes.nrows() != amplitudes.ncols() {
            return Err(FockError::DimensionMismatch {
                expected: amplitudes.nrows().saturating_sub(1),
                found: amplitudes.ncols().saturating_sub(1),
            });
        }
        if amplitudes.nrows() < 2 {
            return Err(FockError::InvalidParameter("cutoff must be at least 1".into()));
        }
        Ok(Self { amplitudes })
    }

    /// `|n⟩|m⟩`.
    pub fn basis(n: usize, m: usize, cutoff: usize) -> Self {
        assert!(n <= cutoff && m <= cutoff, "|{n},{m}⟩ does not fit cutoff {cutoff}");
        let mut amplitudes = DMatrix::zeros(cutoff + 1, cutoff + 1);
        amplitudes[(n, m)] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// `|signal⟩ ⊗ |idler⟩`.
    pub fn product(signal: &FockVector, idler: &FockVector) -> Result<Self> {
        if signal.cutoff() != idler.cutoff() {
            return Err(FockError::DimensionMismatch { expected: signal.cutoff(), found: idler.cutoff() });
        }
        let s = nalgebra::DVector::from_column_slice(signal.amplitudes());
        let i = nalgebra::DVector::from_column_slice(idler.amplitudes());
        Ok(Self { amplitudes: s * i.transpose() })
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.nrows() - 1
    }

    pub fn amplitude(&self, n_signal: usize, n_idler: usize) -> Complex64 {
        self.amplitudes[(n_signal, n_idler)]
    }

    pub fn amplitudes(&self) -> &DMatrix<Complex64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Unnormalized signal vector `⟨m|_idler |ψ⟩`.
    pub fn signal_given_idler(&self, m: usize) -> Vec<Complex64> {
        self.amplitudes.column(m).iter().copied().collect()
    }
}

/// Output amplitudes of `|n, m⟩` inside the `N = n+m` block, indexed by the
/// signal photon number `k` (idler holds `N − k`).
///
/// Built by applying the transformed creation operators to the vacuum one
/// at a time, which needs no large binomial sums and stays accurate for
/// `N` up to a few tens.
fn block_column(n: usize, m: usize, t: f64, rho: f64) -> Vec<f64> {
    let total = n + m;
    let mut coeffs = vec![0.0; total + 1];
    coeffs[0] = 1.0;
    let mut photons = 0usize;
    let mut next = vec![0.0; total + 1];
    // (a_coeff, b_coeff) of each transformed creation operator
    let ops = std::iter::repeat_n((t, rho), n).chain(std::iter::repeat_n((-rho, t), m));
    for (ca, cb) in ops {
        next[..=photons + 1].iter_mut().for_each(|x| *x = 0.0);
        for k in 0..=photons {
            let c = coeffs[k];
            if c == 0.0 {
                continue;
            }
            let j = photons - k;
            next[k + 1] += ca * ((k + 1) as f64).sqrt() * c;
            next[k] += cb * ((j + 1) as f64).sqrt() * c;
        }
        photons += 1;
        coeffs[..=photons].copy_from_slice(&next[..=photons]);
    }
    let norm = (1..=n).chain(1..=m).fold(1.0, |acc, i| acc * (i as f64).sqrt());
    coeffs.iter().map(|c| c / norm).collect()
}

/// Photon-number-conserving beamsplitter with signal transmittance `T`.
///
/// Convention: `a† → t a† + ρ b†`, `b† → −ρ a† + t b†`, `t = √T`, `ρ = √(1−T)`.
/// Each total-photon-number block is transformed exactly; amplitude that the
/// per-mode cutoff cannot hold is reported as leakage. Inputs with
/// `n + m ≤ cutoff` never leak.
pub fn beamsplitter(input: &TwoModeFockState, transmittance: f64) -> Result<Truncated<TwoModeFockState>> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(FockError::InvalidParameter(format!("beamsplitter transmittance {transmittance} outside [0, 1]")));
    }
    let t = transmittance.sqrt();
    let rho = (1.0 - transmittance).sqrt();
    let c = input.cutoff();
    let mut out = DMatrix::zeros(c + 1, c + 1);
    let mut leakage = 0.0;
    for total in 0..=2 * c {
        let mut block = vec![Complex64::new(0.0, 0.0); total + 1];
        let mut any = false;
        for n in total.saturating_sub(c)..=total.min(c) {
            let amp = input.amplitudes[(n, total - n)];
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            any = true;
            for (k, u) in block_column(n, total - n, t, rho).into_iter().enumerate() {
                block[k] += amp * u;
            }
        }
        if !any {
            continue;
        }
        for (k, amp) in block.into_iter().enumerate() {
            if k <= c && total - k <= c {
                out[(k, total - k)] = amp;
            } else {
                leakage += amp.norm_sqr();
            }
        }
    }
    Ok(Truncated { state: TwoModeFockState { amplitudes: out }, leakage })
}
