use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{QuadratureDataset, Result, TomoError};
use crate::fock::FockDensityMatrix;
use crate::special::{gauss_legendre, hermite_functions_into};

/// Uniform histogram bins over `[lo, hi]`. Samples outside the range are
/// counted in the end bins, whose POVM elements extend to `±tail`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for Binning {
    fn default() -> Self {
        Self { bins: 200, lo: -6.0, hi: 6.0 }
    }
}

impl Binning {
    /// Where the end-bin POVM integrals are cut off; far beyond any
    /// Hermite function of the tomography cutoffs used here.
    const TAIL: f64 = 16.0;

    fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn index(&self, x: f64) -> usize {
        let i = ((x - self.lo) / self.width()).floor();
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.bins - 1)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.bins < 2 || !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(TomoError::InvalidInput(format!("bad binning {self:?}")));
        }
        Ok(())
    }

    /// Integration limits of bin `b`, with the end bins stretched to the tail.
    fn limits(&self, b: usize) -> (f64, f64) {
        let h = self.width();
        let lo = if b == 0 { self.lo.min(-Self::TAIL) } else { self.lo + b as f64 * h };
        let hi = if b == self.bins - 1 { self.hi.max(Self::TAIL) } else { self.lo + (b + 1) as f64 * h };
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iter: usize,
    /// Stop once the log-likelihood gain per sample falls below this.
    pub ll_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_iter: 2000, ll_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    #[serde(flatten)]
    pub rho: FockDensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default)]
    pub bootstrap_sigmas: BTreeMap<String, f64>,
    /// Log-likelihood of the starting point followed by every accepted iterate.
    #[serde(skip)]
    pub ll_history: Vec<f64>,
}

/// Upper-triangle index pairs `(m, n)`, `m ≤ n`.
fn pairs(dim: usize) -> Vec<(usize, usize)> {
    (0..dim).flat_map(|m| (m..dim).map(move |n| (m, n))).collect()
}

/// Binned homodyne POVM `Π_{θ,b} = Σ e^{i(m−n)θ} G_{b,mn} |m⟩⟨n|` and the
/// per-phase histograms of one dataset.
pub(crate) struct BinnedProblem {
    dim: usize,
    pairs: Vec<(usize, usize)>,
    /// `g[b][k]` for pair `k`, off-diagonal pairs pre-doubled.
    g: Vec<Vec<f64>>,
    phases: Vec<f64>,
    counts: Vec<Vec<f64>>,
    total: f64,
}

impl BinnedProblem {
    pub(crate) fn new(data: &QuadratureDataset, cutoff: usize, binning: &Binning) -> Result<Self> {
        binning.validate()?;
        let mut distinct: Vec<f64> = Vec::new();
        for p in data.phases() {
            if !distinct.iter().any(|q| (q - p).abs() < 1e-9) {
                distinct.push(p);
            }
        }
        if distinct.len() < 2 {
            return Err(TomoError::InsufficientPhases(distinct.len()));
        }
        if cutoff < 1 {
            return Err(TomoError::InvalidInput("tomography cutoff must be at least 1".into()));
        }
        let dim = cutoff + 1;
        let pairs = pairs(dim);
        let g = Self::bin_integrals(dim, &pairs, binning);
        let mut phases: Vec<f64> = Vec::new();
        let mut counts: Vec<Vec<f64>> = Vec::new();
        for block in &data.blocks {
            let mut hist = vec![0.0; binning.bins];
            for &x in &block.xs {
                hist[binning.index(x)] += 1.0;
            }
            match phases.iter().position(|q| (q - block.phase_deg).abs() < 1e-9) {
                Some(j) => counts[j].iter_mut().zip(hist).for_each(|(c, h)| *c += h),
                None => {
                    phases.push(block.phase_deg);
                    counts.push(hist);
                }
            }
        }
        let total = counts.iter().flatten().sum::<f64>();
        if total == 0.0 {
            return Err(TomoError::InvalidInput("dataset is empty".into()));
        }
        Ok(Self { dim, pairs, g, phases: phases.iter().map(|p| p.to_radians()).collect(), counts, total })
    }

    fn bin_integrals(dim: usize, pairs: &[(usize, usize)], binning: &Binning) -> Vec<Vec<f64>> {
        let (nodes, weights) = gauss_legendre(8);
        let mut psi = vec![0.0; dim];
        (0..binning.bins)
            .map(|b| {
                let (lo, hi) = binning.limits(b);
                let panels = ((hi - lo) / 0.1).ceil().max(1.0) as usize;
                let h = (hi - lo) / panels as f64;
                let mut acc = vec![0.0; pairs.len()];
                for p in 0..panels {
                    let mid = lo + (p as f64 + 0.5) * h;
                    for (z, w) in nodes.iter().zip(&weights) {
                        hermite_functions_into(mid + 0.5 * h * z, &mut psi);
                        let w = 0.5 * h * w;
                        for (a, &(m, n)) in acc.iter_mut().zip(pairs) {
                            *a += w * psi[m] * psi[n];
                        }
                    }
                }
                for (a, &(m, n)) in acc.iter_mut().zip(pairs) {
                    if m != n {
                        *a *= 2.0;
                    }
                }
                acc
            })
            .collect()
    }

    pub(crate) fn total(&self) -> f64 {
        self.total
    }

    /// `Re(ρ_{mn} e^{i(n−m)θ})` for every pair.
    fn phase_vector(&self, rho: &DMatrix<Complex64>, theta: f64) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|&(m, n)| (rho[(m, n)] * Complex64::from_polar(1.0, (n as f64 - m as f64) * theta)).re)
            .collect()
    }

    fn probabilities(&self, rho: &DMatrix<Complex64>, theta: f64) -> Vec<f64> {
        let v = self.phase_vector(rho, theta);
        self.g.iter().map(|gb| gb.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()).collect()
    }

    pub(crate) fn log_likelihood(&self, rho: &DMatrix<Complex64>) -> f64 {
        self.phases
            .iter()
            .zip(&self.counts)
            .map(|(&theta, f)| {
                let p = self.probabilities(rho, theta);
                f.iter().zip(p).filter(|(&c, _)| c > 0.0).map(|(&c, p)| c * p.max(f64::MIN_POSITIVE).ln()).sum::<f64>()
            })
            .sum()
    }

    /// `R(ρ)/N = Σ_{θ,b} (f/p) Π_{θ,b} / N`.
    fn r_operator(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut r = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for (&theta, f) in self.phases.iter().zip(&self.counts) {
            let p = self.probabilities(rho, theta);
            let mut m_sym = vec![0.0; self.pairs.len()];
            for ((gb, &c), pb) in self.g.iter().zip(f).zip(p) {
                if c == 0.0 {
                    continue;
                }
                let w = c / pb.max(f64::MIN_POSITIVE);
                m_sym.iter_mut().zip(gb).for_each(|(acc, g)| *acc += w * g);
            }
            for (&(m, n), &val) in self.pairs.iter().zip(&m_sym) {
                let val = if m == n { val } else { 0.5 * val };
                let e = Complex64::from_polar(val, (m as f64 - n as f64) * theta);
                r[(m, n)] += e;
                if m != n {
                    r[(n, m)] += e.conj();
                }
            }
        }
        r / Complex64::new(self.total, 0.0)
    }
}

fn sandwich(a: &DMatrix<Complex64>, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let out = a * rho * a.adjoint();
    let herm = (&out + out.adjoint()) * Complex64::new(0.5, 0.0);
    let tr: f64 = herm.diagonal().iter().map(|c| c.re).sum();
    herm / Complex64::new(tr, 0.0)
}

/// Iterative `R·ρ·R` maximum-likelihood reconstruction from the maximally
/// mixed state.
pub fn mle_reconstruct(
    data: &QuadratureDataset,
    cutoff: usize,
    binning: &Binning,
    stop: &StopRule,
) -> Result<TomographyResult> {
    let problem = BinnedProblem::new(data, cutoff, binning)?;
    let dim = cutoff + 1;
    let start = DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0));
    iterate(&problem, start, stop)
}

/// Same as [`mle_reconstruct`] but starting from `initial`, e.g. a previous
/// reconstruction when bootstrapping.
pub fn mle_reconstruct_from(
    data: &QuadratureDataset,
    initial: &FockDensityMatrix,
    binning: &Binning,
    stop: &StopRule,
) -> Result<TomographyResult> {
    let problem = BinnedProblem::new(data, initial.cutoff(), binning)?;
    // mix in a little of the identity so no outcome starts at zero probability
    let dim = initial.dim() as f64;
    let start = initial.entries() * Complex64::new(0.999, 0.0)
        + DMatrix::from_diagonal_element(initial.dim(), initial.dim(), Complex64::new(0.001 / dim, 0.0));
    iterate(&problem, start / Complex64::new(initial.trace() * 0.999 + 0.001, 0.0), stop)
}

/// Each step tries the plain update first. If that lowers the likelihood,
/// the diluted map `(I + εR)ρ(I + εR)` is tried with shrinking `ε`, which
/// increases the likelihood for small enough `ε` unless `ρ` is already
/// stationary. Hence the recorded likelihood never decreases.
pub(crate) fn iterate(problem: &BinnedProblem, start: DMatrix<Complex64>, stop: &StopRule) -> Result<TomographyResult> {
    let n = problem.total();
    let dim = start.nrows();
    let identity = DMatrix::<Complex64>::identity(dim, dim);
    let mut rho = start;
    let mut ll = problem.log_likelihood(&rho);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < stop.max_iter {
        let r = problem.r_operator(&rho);
        let mut candidate = sandwich(&r, &rho);
        let mut cand_ll = problem.log_likelihood(&candidate);
        let mut eps = 1.0;
        while !(cand_ll >= ll) && eps > 1e-8 {
            let a = &identity + &r * Complex64::new(eps, 0.0);
            candidate = sandwich(&a, &rho);
            cand_ll = problem.log_likelihood(&candidate);
            eps *= 0.5;
        }
        if !(cand_ll >= ll) {
            // no ascent direction left at double precision
            converged = true;
            break;
        }
        iterations += 1;
        let gain = (cand_ll - ll) / n;
        rho = candidate;
        ll = cand_ll;
        history.push(ll);
        if gain < stop.ll_tol {
            converged = true;
            break;
        }
    }
    let result = TomographyResult {
        rho: FockDensityMatrix::from_entries_unchecked(rho)?,
        log_likelihood: ll,
        iterations,
        converged,
        bootstrap_sigmas: BTreeMap::new(),
        ll_history: history,
    };
    if converged {
        Ok(result)
    } else {
        Err(TomoError::NonConvergence { best: Box::new(result) })
    }
}
