use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FockError, FockVector, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Single-mode density matrix on photon numbers `0..=cutoff`.
///
/// Construction through [`FockDensityMatrix::new`] checks Hermiticity, trace
/// and positivity; the arithmetic helpers used inside the crate keep those
/// properties by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    entries: DMatrix<Complex64>,
}

/// Wire format: `{cutoff, re, im}` with row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub cutoff: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl FockDensityMatrix {
    /// Validating constructor.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let rho = Self::from_entries_unchecked(entries)?;
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_entries_unchecked(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(FockError::DimensionMismatch {
                expected: entries.nrows().saturating_sub(1),
                found: entries.ncols().saturating_sub(1),
            });
        }
        if entries.nrows() < 2 {
            return Err(FockError::InvalidParameter("cutoff must be at least 1".into()));
        }
        Ok(Self { entries })
    }

    pub fn pure(state: &FockVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self { entries: &v * v.adjoint() }
    }

    pub fn vacuum(cutoff: usize) -> Self {
        Self::pure(&FockVector::vacuum(cutoff))
    }

    pub fn number(n: usize, cutoff: usize) -> Self {
        Self::pure(&FockVector::number(n, cutoff))
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let dim = populations.len();
        let mut entries = DMatrix::zeros(dim, dim);
        for (n, &p) in populations.iter().enumerate() {
            entries[(n, n)] = Complex64::new(p, 0.0);
        }
        Self::new(entries)
    }

    pub fn cutoff(&self) -> usize {
        self.entries.nrows() - 1
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[(m, n)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|m| (0..=m).all(|n| (self.entries[(m, n)] - self.entries[(n, m)].conj()).norm() <= tol))
    }

    /// Eigenvalues in ascending order (Hermitian part only).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = self.hermitian_part();
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    fn hermitian_part(&self) -> DMatrix<Complex64> {
        (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Checks Hermiticity, trace in `(0, 1]` and positivity at the crate tolerances.
    pub fn validate(&self) -> Result<()> {
        if self.entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(FockError::InvalidParameter("non-finite matrix entry".into()));
        }
        if !self.is_hermitian(HERMITIAN_TOL) {
            return Err(FockError::InvalidParameter("density matrix is not Hermitian".into()));
        }
        let tr = self.trace();
        if tr <= 0.0 || tr > 1.0 + TRACE_TOL {
            return Err(FockError::InvalidParameter(format!("trace {tr} outside (0, 1]")));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(FockError::InvalidParameter(format!(
                "density matrix not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(())
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr < 1e-15 {
            return Err(FockError::ZeroNorm);
        }
        Ok(Self { entries: &self.entries / Complex64::new(tr, 0.0) })
    }

    pub(crate) fn scaled(&self, factor: f64) -> Self {
        Self { entries: &self.entries * Complex64::new(factor, 0.0) }
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        self.entries += &other.entries;
    }

    /// `e^{iφ n̂} ρ e^{−iφ n̂}`.
    pub fn rotated(&self, phi: f64) -> Self {
        let d = self.dim();
        let entries = DMatrix::from_fn(d, d, |m, n| {
            self.entries[(m, n)] * Complex64::from_polar(1.0, phi * (m as f64 - n as f64))
        });
        Self { entries }
    }

    /// Re-expresses the state on a different cutoff, zero-padding or dropping
    /// the high photon numbers. Dropping does not renormalize.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let d = cutoff + 1;
        let keep = d.min(self.dim());
        let mut entries = DMatrix::zeros(d, d);
        entries.view_mut((0, 0), (keep, keep)).copy_from(&self.entries.view((0, 0), (keep, keep)));
        Self { entries }
    }

    /// `½‖ρ − σ‖₁`, after padding both to the larger cutoff.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let cutoff = self.cutoff().max(other.cutoff());
        let diff = self.with_cutoff(cutoff).entries - other.with_cutoff(cutoff).entries;
        let h = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
        0.5 * h.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>()
    }

    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        let cutoff = self.cutoff().max(other.cutoff());
        let a = self.with_cutoff(cutoff).hermitian_part();
        let b = other.with_cutoff(cutoff).hermitian_part();
        let sqrt_a = psd_sqrt(&a);
        let m = &sqrt_a * b * &sqrt_a;
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let s: f64 = m.symmetric_eigenvalues().iter().map(|e| e.max(0.0).sqrt()).sum();
        s * s
    }

    pub fn to_json(&self) -> DensityMatrixJson {
        let d = self.dim();
        DensityMatrixJson {
            cutoff: self.cutoff(),
            re: (0..d).map(|m| (0..d).map(|n| self.entries[(m, n)].re).collect()).collect(),
            im: (0..d).map(|m| (0..d).map(|n| self.entries[(m, n)].im).collect()).collect(),
        }
    }

    pub fn from_json(json: &DensityMatrixJson) -> Result<Self> {
        let d = json.cutoff + 1;
        let shape_ok =
            json.re.len() == d && json.im.len() == d && json.re.iter().chain(json.im.iter()).all(|row| row.len() == d);
        if !shape_ok {
            return Err(FockError::DimensionMismatch { expected: json.cutoff, found: json.re.len().saturating_sub(1) });
        }
        Self::new(DMatrix::from_fn(d, d, |m, n| Complex64::new(json.re[m][n], json.im[m][n])))
    }
}

impl Serialize for FockDensityMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FockDensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = DensityMatrixJson::deserialize(deserializer)?;
        Self::from_json(&json).map_err(serde::de::Error::custom)
    }
}

fn psd_sqrt(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = h.clone().symmetric_eigen();
    let d = h.nrows();
    let mut out = DMatrix::zeros(d, d);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        out += v * v.adjoint() * Complex64::new(lambda.max(0.0).sqrt(), 0.0);
    }
    out
}

/// Diagonal of ρ: `P(n)` for `n = 0..=cutoff`.
pub fn photon_number_distribution(state: &FockDensityMatrix) -> Vec<f64> {
    state.entries.diagonal().iter().map(|c| c.re).collect()
}
