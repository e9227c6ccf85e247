use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{PhaseBlock, QuadratureDataset, Result, TomoError};
use crate::fock::FockDensityMatrix;
use crate::seed::{streams, task_rng};
use crate::special::hermite_functions_into;

/// Real symmetric kernel `A_{mn} = Re(ρ_{mn} e^{i(n−m)θ})`, so that
/// `pr(x|θ) = ψ(x)ᵀ A ψ(x)`.
fn phase_kernel(rho: &FockDensityMatrix, theta: f64) -> DMatrix<f64> {
    let d = rho.dim();
    DMatrix::from_fn(d, d, |m, n| (rho.get(m, n) * Complex64::from_polar(1.0, (n as f64 - m as f64) * theta)).re)
}

fn kernel_pdf(kernel: &DMatrix<f64>, x: f64, psi: &mut [f64]) -> f64 {
    hermite_functions_into(x, psi);
    let d = psi.len();
    let mut acc = 0.0;
    for m in 0..d {
        let mut row = 0.0;
        for n in 0..d {
            row += kernel[(m, n)] * psi[n];
        }
        acc += psi[m] * row;
    }
    acc
}

/// Homodyne marginal `pr(x|θ)` at LO phase `phase_deg`.
pub fn quadrature_pdf(rho: &FockDensityMatrix, phase_deg: f64, x_grid: &[f64]) -> Vec<f64> {
    let kernel = phase_kernel(rho, phase_deg.to_radians());
    let mut psi = vec![0.0; rho.dim()];
    x_grid.iter().map(|&x| kernel_pdf(&kernel, x, &mut psi)).collect()
}

/// Mean and variance of `x_θ`, from `⟨a⟩`, `⟨a²⟩` and `⟨n⟩` (unnormalized
/// states are normalized first).
pub fn quadrature_moments(rho: &FockDensityMatrix, phase_deg: f64) -> (f64, f64) {
    let theta = phase_deg.to_radians();
    let d = rho.dim();
    let tr = rho.trace();
    let mut a = Complex64::new(0.0, 0.0);
    let mut a2 = Complex64::new(0.0, 0.0);
    let mut n_mean = 0.0;
    for n in 0..d {
        let nf = n as f64;
        n_mean += nf * rho.get(n, n).re;
        if n >= 1 {
            a += rho.get(n, n - 1) * nf.sqrt();
        }
        if n >= 2 {
            a2 += rho.get(n, n - 2) * (nf * (nf - 1.0)).sqrt();
        }
    }
    let rot = Complex64::from_polar(1.0, -theta);
    let mean = std::f64::consts::SQRT_2 * (a * rot).re / tr;
    let second = ((a2 * rot * rot).re + n_mean) / tr + 0.5;
    (mean, second - mean * mean)
}

/// Inverse-CDF sampler for one phase. The CDF is tabulated by the trapezoid
/// rule on `mean ± 6σ`, doubling the resolution until successive tables
/// agree to 1e-6.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

const CDF_TOL: f64 = 1e-6;
const MAX_GRID: usize = 1 << 18;

impl QuadratureSampler {
    pub fn new(rho: &FockDensityMatrix, phase_deg: f64) -> Self {
        let (mean, var) = quadrature_moments(rho, phase_deg);
        let sigma = var.max(1e-6).sqrt();
        let (lo, hi) = (mean - 6.0 * sigma, mean + 6.0 * sigma);
        let kernel = phase_kernel(rho, phase_deg.to_radians());
        let mut psi = vec![0.0; rho.dim()];

        let mut intervals = 256;
        let mut pdf = Self::tabulate(&kernel, lo, hi, intervals, &mut psi);
        let mut cdf = cumulative(&pdf, (hi - lo) / intervals as f64);
        loop {
            let finer_pdf = Self::refine(&kernel, lo, hi, intervals, &pdf, &mut psi);
            let finer_cdf = cumulative(&finer_pdf, (hi - lo) / (2 * intervals) as f64);
            let diff = cdf.iter().zip(finer_cdf.iter().step_by(2)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            intervals *= 2;
            pdf = finer_pdf;
            cdf = finer_cdf;
            if diff < CDF_TOL || intervals >= MAX_GRID {
                break;
            }
        }
        let h = (hi - lo) / intervals as f64;
        let grid = (0..=intervals).map(|i| lo + i as f64 * h).collect();
        Self { grid, cdf }
    }

    fn tabulate(kernel: &DMatrix<f64>, lo: f64, hi: f64, intervals: usize, psi: &mut [f64]) -> Vec<f64> {
        let h = (hi - lo) / intervals as f64;
        (0..=intervals).map(|i| kernel_pdf(kernel, lo + i as f64 * h, psi).max(0.0)).collect()
    }

    /// Halves the step, reusing the existing points.
    fn refine(kernel: &DMatrix<f64>, lo: f64, hi: f64, intervals: usize, coarse: &[f64], psi: &mut [f64]) -> Vec<f64> {
        let h = (hi - lo) / (2 * intervals) as f64;
        let mut out = Vec::with_capacity(2 * intervals + 1);
        for i in 0..intervals {
            out.push(coarse[i]);
            out.push(kernel_pdf(kernel, lo + (2 * i + 1) as f64 * h, psi).max(0.0));
        }
        out.push(coarse[intervals]);
        out
    }

    /// Probability mass captured by the grid.
    pub fn captured_mass(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    /// Quantile for `u ∈ [0, 1)`, linear inside each grid cell.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u * self.captured_mass();
        let i = self.cdf.partition_point(|&c| c <= target).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
        self.grid[i - 1] + frac * (self.grid[i] - self.grid[i - 1])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

fn cumulative(pdf: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(pdf.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in pdf.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Draws `n_per_phase` quadratures at each phase plus `n_per_phase`
/// vacuum shot-noise samples. Phase `i` uses RNG task `(seed, HOMODYNE, i)`.
pub fn sample_quadratures(
    rho: &FockDensityMatrix,
    phases_deg: &[f64],
    n_per_phase: usize,
    seed: u64,
) -> Result<QuadratureDataset> {
    if n_per_phase == 0 {
        return Err(TomoError::InvalidInput("n_per_phase must be at least 1".into()));
    }
    if phases_deg.is_empty() {
        return Err(TomoError::InsufficientPhases(0));
    }
    let blocks = phases_deg
        .par_iter()
        .enumerate()
        .map(|(i, &phase)| {
            let sampler = QuadratureSampler::new(rho, phase);
            let mut rng = task_rng(seed, streams::HOMODYNE, i as u64);
            PhaseBlock { phase_deg: phase, xs: (0..n_per_phase).map(|_| sampler.sample(&mut rng)).collect() }
        })
        .collect();
    let mut rng = task_rng(seed, streams::SHOT_NOISE, 0);
    let vacuum = Normal::new(0.0, 0.5f64.sqrt()).expect("valid normal");
    let shot_noise = (0..n_per_phase).map(|_| vacuum.sample(&mut rng)).collect();
    Ok(QuadratureDataset { blocks, shot_noise, seed: Some(seed) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    use crate::fock::{squeezed_vacuum, FockVector};
    use crate::special::gauss_legendre;
    use crate::tomo::test_util::random_rho;

    /// Composite Gauss–Legendre over [-a, a].
    fn integrate(f: impl Fn(&[f64]) -> Vec<f64>, a: f64, panels: usize) -> f64 {
        let (nodes, weights) = gauss_legendre(16);
        let h = 2.0 * a / panels as f64;
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for p in 0..panels {
            let mid = -a + (p as f64 + 0.5) * h;
            for (z, w) in nodes.iter().zip(&weights) {
                xs.push(mid + 0.5 * h * z);
                ws.push(0.5 * h * w);
            }
        }
        f(&xs).iter().zip(ws).map(|(v, w)| v * w).sum()
    }

    #[test]
    fn vacuum_is_gaussian() {
        let rho = FockDensityMatrix::vacuum(6);
        let xs = [-1.3, 0.0, 0.4, 2.2];
        for theta in [0.0, 33.0, 90.0] {
            for (x, p) in xs.iter().zip(quadrature_pdf(&rho, theta, &xs)) {
                assert_abs_diff_eq!(p, (-x * x).exp() / PI.sqrt(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn single_photon_marginal() {
        let rho = FockDensityMatrix::number(1, 6);
        let xs = [0.0, 0.7, -1.9];
        for (x, p) in xs.iter().zip(quadrature_pdf(&rho, 0.0, &xs)) {
            assert_abs_diff_eq!(p, 2.0 * x * x * (-x * x).exp() / PI.sqrt(), epsilon = 1e-15);
        }
        let (mean, var) = quadrature_moments(&rho, 45.0);
        assert_abs_diff_eq!(mean, 0.0);
        assert_abs_diff_eq!(var, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn squeezed_quadrature_variance() {
        let r = 0.1462;
        let rho = squeezed_vacuum(r, 30).unwrap().state.to_density_matrix();
        // operator convention squeezes θ=0; the lab frame rotates by π/2
        let (_, v0) = quadrature_moments(&rho, 0.0);
        assert_abs_diff_eq!(v0, (-2.0 * r).exp() / 2.0, epsilon = 1e-12);
        let lab = rho.rotated(PI / 2.0);
        let (_, v90) = quadrature_moments(&lab, 90.0);
        assert_abs_diff_eq!(v90, (-2.0 * r).exp() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(10.0 * (2.0 * v90).log10(), -1.27, epsilon = 0.01);
        // pdf second moment agrees with the closed form
        let m2 =
            integrate(|xs| quadrature_pdf(&lab, 90.0, xs).iter().zip(xs).map(|(p, x)| p * x * x).collect(), 10.0, 40);
        assert_abs_diff_eq!(m2, v90, epsilon = 1e-10);
    }

    #[test]
    fn moments_match_pdf_for_coherent_like_state() {
        let psi = FockVector::new(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.3, 0.5),
            Complex64::new(-0.2, 0.1),
            Complex64::new(0.0, 0.3),
        ])
        .unwrap()
        .normalized()
        .unwrap();
        let rho = psi.to_density_matrix();
        for theta in [0.0, 30.0, 121.0] {
            let (mean, var) = quadrature_moments(&rho, theta);
            let m1 =
                integrate(|xs| quadrature_pdf(&rho, theta, xs).iter().zip(xs).map(|(p, x)| p * x).collect(), 10.0, 40);
            let m2 = integrate(
                |xs| quadrature_pdf(&rho, theta, xs).iter().zip(xs).map(|(p, x)| p * x * x).collect(),
                10.0,
                40,
            );
            assert_abs_diff_eq!(mean, m1, epsilon = 1e-10);
            assert_abs_diff_eq!(var, m2 - m1 * m1, epsilon = 1e-10);
        }
    }

    #[test]
    fn sampler_quantiles_match_gaussian() {
        let s = QuadratureSampler::new(&FockDensityMatrix::vacuum(4), 0.0);
        assert_abs_diff_eq!(s.captured_mass(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s.quantile(0.5), 0.0, epsilon = 1e-6);
        // Φ⁻¹(0.975) · √0.5
        assert_abs_diff_eq!(s.quantile(0.975), 1.959964 * 0.5f64.sqrt(), epsilon = 1e-4);
    }

    #[test]
    fn vacuum_samples_have_half_variance() {
        let ds = sample_quadratures(&FockDensityMatrix::vacuum(4), &[0.0], 1_000_000, 3).unwrap();
        let xs = &ds.blocks[0].xs;
        let n = xs.len() as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n;
        // standard error of the variance estimate is 0.5·√(2/n)
        assert!((var - 0.5).abs() < 3.0 * 0.5 * (2.0 / n).sqrt(), "var {var}");
        let shot = super::super::dataset::sample_variance(&ds.shot_noise);
        assert!((shot - 0.5).abs() < 3.0 * 0.5 * (2.0 / n).sqrt());
    }

    #[test]
    fn single_photon_fourth_moment() {
        let ds = sample_quadratures(&FockDensityMatrix::number(1, 4), &[0.0], 400_000, 9).unwrap();
        let xs = &ds.blocks[0].xs;
        let n = xs.len() as f64;
        let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n;
        // ⟨x⁴⟩ = 15/4, ⟨x⁸⟩ = 945/16 → σ(m4) = √((945/16 − 225/16)/n)
        let se = ((945.0 - 225.0) / 16.0 / n).sqrt();
        assert!((m4 - 3.75).abs() < 4.0 * se, "m4 {m4}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let rho = FockDensityMatrix::number(2, 5);
        let a = sample_quadratures(&rho, &[0.0, 45.0], 100, 11).unwrap();
        let b = sample_quadratures(&rho, &[0.0, 45.0], 100, 11).unwrap();
        let c = sample_quadratures(&rho, &[0.0, 45.0], 100, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(sample_quadratures(&rho, &[0.0], 0, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn pdf_integrates_to_trace(values in proptest::collection::vec(0.0f64..1.0, 23), dim in 2usize..=21, theta in -180.0f64..180.0) {
            let rho = random_rho(&values, dim);
            let total = integrate(|xs| quadrature_pdf(&rho, theta, xs), 12.0, 96);
            prop_assert!((total - rho.trace()).abs() < 1e-8, "total {}", total);
            let xs: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.1).collect();
            prop_assert!(quadrature_pdf(&rho, theta, &xs).iter().all(|&p| p > -1e-12));
        }

        #[test]
        fn phase_covariance(values in proptest::collection::vec(0.0f64..1.0, 19), phi in -3.2f64..3.2, theta in -180.0f64..180.0) {
            let rho = random_rho(&values, 10);
            let xs: Vec<f64> = (-30..=30).map(|i| i as f64 * 0.2).collect();
            let a = quadrature_pdf(&rho, theta, &xs);
            let b = quadrature_pdf(&rho.rotated(phi), theta + phi.to_degrees(), &xs);
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }
}
