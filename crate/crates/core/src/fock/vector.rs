use num_complex::Complex64;

use super::{FockDensityMatrix, FockError, Result, Truncated, DEFAULT_LEAKAGE_TOLERANCE, MAX_SQUEEZING};

/// Pure single-mode state on photon numbers `0..=cutoff`.
///
/// The norm is not stored; it is recomputed on demand because operations such
/// as [`annihilate`] deliberately return unnormalized vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(FockError::InvalidParameter(format!(
                "cutoff must be at least 1, got {} amplitudes",
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(FockError::InvalidParameter("non-finite amplitude".into()));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn vacuum(cutoff: usize) -> Self {
        Self::number(0, cutoff)
    }

    /// Fock state `|n⟩`.
    ///
    /// # Panics
    ///
    /// If `n > cutoff` or `cutoff == 0`.
    pub fn number(n: usize, cutoff: usize) -> Self {
        assert!(cutoff >= 1 && n <= cutoff, "|{n}⟩ does not fit cutoff {cutoff}");
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); cutoff + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm < 1e-15 {
            return Err(FockError::ZeroNorm);
        }
        Ok(Self { amplitudes: self.amplitudes.iter().map(|c| c / norm).collect() })
    }

    /// Phase-space rotation `e^{iφ n̂}|ψ⟩`.
    pub fn rotated(&self, phi: f64) -> Self {
        Self {
            amplitudes: self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(n, c)| c * Complex64::from_polar(1.0, phi * n as f64))
                .collect(),
        }
    }

    /// Photon numbers carrying amplitude above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        self.amplitudes.iter().enumerate().filter(|(_, c)| c.norm() > threshold).map(|(n, _)| n).collect()
    }

    /// Projector `|ψ⟩⟨ψ|`, not renormalized.
    pub fn to_density_matrix(&self) -> FockDensityMatrix {
        FockDensityMatrix::pure(self)
    }
}

/// Squeezed vacuum `S(r)|0⟩` truncated at `cutoff`, with the default
/// leakage tolerance.
pub fn squeezed_vacuum(r: f64, cutoff: usize) -> Result<Truncated<FockVector>> {
    squeezed_vacuum_with_tolerance(r, cutoff, DEFAULT_LEAKAGE_TOLERANCE)
}

/// Closed form `c_{2k} = √sech r (−tanh r)^k √((2k)!) / (2^k k!)`, evaluated
/// by the ratio `c_{2k+2}/c_{2k} = −tanh r √((2k+1)/(2k+2))`.
///
/// The returned vector is the plain truncation (norm `1 − leakage`); the tail
/// mass beyond the cutoff is summed explicitly rather than inferred from the
/// norm, so tiny leakages are not lost to cancellation.
pub fn squeezed_vacuum_with_tolerance(r: f64, cutoff: usize, tolerance: f64) -> Result<Truncated<FockVector>> {
    if cutoff < 2 {
        return Err(FockError::InvalidParameter(format!("squeezed vacuum needs cutoff >= 2, got {cutoff}")));
    }
    if !r.is_finite() || r.abs() > MAX_SQUEEZING {
        return Err(FockError::InvalidParameter(format!(
            "squeezing parameter {r} outside [-{MAX_SQUEEZING}, {MAX_SQUEEZING}]"
        )));
    }
    let t = r.tanh();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    let mut c = (1.0 / r.cosh()).sqrt();
    let mut tail = 0.0;
    for k in 0usize.. {
        let n = 2 * k;
        if n <= cutoff {
            amplitudes[n] = Complex64::new(c, 0.0);
        } else {
            let term = c * c;
            tail += term;
            if term < 1e-40 || term <= tail * 1e-18 {
                break;
            }
        }
        if t == 0.0 {
            break;
        }
        let kf = k as f64;
        c *= -t * ((2.0 * kf + 1.0) / (2.0 * kf + 2.0)).sqrt();
    }
    if tail > tolerance {
        return Err(FockError::Truncation { leakage: tail, tolerance });
    }
    Ok(Truncated { state: FockVector { amplitudes }, leakage: tail })
}

/// `(aψ)_n = √(n+1) ψ_{n+1}`, unnormalized; the top entry becomes zero.
pub fn annihilate(state: &FockVector) -> Result<FockVector> {
    let amps = state.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for n in 0..amps.len() - 1 {
        out[n] = amps[n + 1] * ((n + 1) as f64).sqrt();
    }
    let result = FockVector { amplitudes: out };
    if result.norm_sqr().sqrt() < 1e-15 {
        return Err(FockError::ZeroNorm);
    }
    Ok(result)
}
