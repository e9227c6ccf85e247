//! Hermite functions, Gauss–Legendre rules and Laguerre recurrences.

use std::f64::consts::PI;

/// Normalized Hermite functions `ψ_n(x) = H_n(x) e^{−x²/2} / √(2ⁿ n! √π)`
/// for `n = 0..out.len()`, by the upward recurrence on `ψ_n` itself:
/// `ψ_{n+1} = √(2/(n+1)) x ψ_n − √(n/(n+1)) ψ_{n−1}`.
pub fn hermite_functions_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    hermite_functions_into(x, &mut out);
    out
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, `order ≥ 1`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_order(z), p0 = P_{order−1}(z)
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Generalized Laguerre values `L_n^{(k)}(y)` for `n = 0..out.len()`.
pub fn laguerre_into(k: usize, y: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let kf = k as f64;
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = 1.0 + kf - y;
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0 + kf - y) * out[n] - (nf + kf) * out[n - 1]) / (nf + 1.0);
    }
}
