use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fock::FockDensityMatrix;
use crate::special::laguerre_into;

/// Wigner function sampled on a rectangular grid; `values[i][j]` is
/// `W(x_axis[j], p_axis[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    /// `−half_width, …, half_width` in steps of `step`, with 0 exactly on the axis.
    pub fn symmetric_axis(half_width: f64, step: f64) -> Vec<f64> {
        let half = (half_width / step).round() as i64;
        (-half..=half).map(|i| i as f64 * step).collect()
    }

    /// `∬ W dx dp` by the trapezoid rule.
    pub fn integral(&self) -> f64 {
        let wx = trapezoid_weights(&self.x_axis);
        let wp = trapezoid_weights(&self.p_axis);
        self.values.iter().zip(&wp).map(|(row, wpi)| wpi * row.iter().zip(&wx).map(|(v, w)| v * w).sum::<f64>()).sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Values along `x = 0` as `(p, W)` pairs, if the grid contains that line.
    pub fn p_axis_cut(&self) -> Option<Vec<(f64, f64)>> {
        let j = self.x_axis.iter().position(|&x| x.abs() < 1e-12)?;
        Some(self.p_axis.iter().zip(&self.values).map(|(&p, row)| (p, row[j])).collect())
    }

    /// CSV matrix: header `p\x,x_0,x_1,…`, then one row per `p`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header = std::iter::once("p\\x".to_string()).chain(self.x_axis.iter().map(|x| x.to_string()));
        w.write_record(header)?;
        for (p, row) in self.p_axis.iter().zip(&self.values) {
            w.write_record(std::iter::once(p.to_string()).chain(row.iter().map(|v| v.to_string())))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
            let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Precomputed `√(n!/(n+k)!)` for the Fock-basis Wigner kernels.
struct Kernel {
    dim: usize,
    ratio: Vec<Vec<f64>>,
}

impl Kernel {
    fn new(dim: usize) -> Self {
        let ratio = (0..dim)
            .map(|n| {
                let mut acc = 1.0;
                (0..dim - n)
                    .map(|k| {
                        if k > 0 {
                            acc /= ((n + k) as f64).sqrt();
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Self { dim, ratio }
    }

    /// `W = (1/π) Σ ρ_{mn} W_{mn}` with, for `m = n + k ≥ n`,
    /// `W_{mn} = (−1)ⁿ √(n!/m!) (√2 (x − ip))^k e^{−(x²+p²)} L_n^{(k)}(2(x²+p²))`
    /// and `W_{nm} = conj(W_{mn})`.
    fn eval(&self, rho: &FockDensityMatrix, x: f64, p: f64, lag: &mut [f64]) -> f64 {
        let r2 = x * x + p * p;
        let y = 2.0 * r2;
        let gauss = (-r2).exp();
        let z = num_complex::Complex64::new(x, -p) * std::f64::consts::SQRT_2;
        let mut zk = num_complex::Complex64::new(1.0, 0.0);
        let mut total = 0.0;
        for k in 0..self.dim {
            let count = self.dim - k;
            laguerre_into(k, y, &mut lag[..count]);
            let mut acc = 0.0;
            for n in 0..count {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let kernel = zk * (sign * self.ratio[n][k] * lag[n]);
                let term = (rho.get(n + k, n) * kernel).re;
                acc += if k == 0 { term } else { 2.0 * term };
            }
            total += acc;
            zk *= z;
        }
        total * gauss / PI
    }
}

pub fn wigner_at(rho: &FockDensityMatrix, x: f64, p: f64) -> f64 {
    let kernel = Kernel::new(rho.dim());
    let mut lag = vec![0.0; rho.dim()];
    kernel.eval(rho, x, p, &mut lag)
}

/// `W(0,0) = (1/π) Σ (−1)ⁿ ρ_{nn}`.
pub fn wigner_origin(rho: &FockDensityMatrix) -> f64 {
    (0..rho.dim()).map(|n| if n % 2 == 0 { rho.get(n, n).re } else { -rho.get(n, n).re }).sum::<f64>() / PI
}

pub fn wigner(rho: &FockDensityMatrix, x_axis: &[f64], p_axis: &[f64]) -> WignerGrid {
    let kernel = Kernel::new(rho.dim());
    let values = p_axis
        .par_iter()
        .map(|&p| {
            let mut lag = vec![0.0; rho.dim()];
            x_axis.iter().map(|&x| kernel.eval(rho, x, p, &mut lag)).collect()
        })
        .collect();
    WignerGrid { x_axis: x_axis.to_vec(), p_axis: p_axis.to_vec(), values }
}
