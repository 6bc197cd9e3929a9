//! Local limit of the chain's transition probabilities (no flat steps).

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{LabError, Result};

/// `g_t(x, y) = (e^{-(x-y)^2/2t} - e^{-(x+y)^2/2t}) / sqrt(2 pi t)`.
pub fn heat_kernel(t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0 && x > 0.0 && y > 0.0) {
        return Err(LabError::invalid(format!("heat kernel needs t, x, y > 0, got ({t}, {x}, {y})")));
    }
    let a = -(x - y).powi(2) / (2.0 * t);
    // e^a (1 - e^{-2xy/t})
    Ok(a.exp() * -(-2.0 * x * y / t).exp_m1() / (2.0 * std::f64::consts::PI * t).sqrt())
}

fn ln_binomial(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k as u64) as f64 + 1.0)
}

/// `ln sinh(z)` for `z > 0`.
fn ln_sinh(z: f64) -> f64 {
    z + (-(-2.0 * z).exp_m1()).ln() - std::f64::consts::LN_2
}

fn even_floor(x: f64) -> u64 {
    let f = x.floor() as u64;
    f - f % 2
}

/// `P(X_T = b | X_0 = a)` for the chain with `sigma = 0`:
/// `[C(T, (T+b-a)/2) - C(T, (T+a+b+2)/2)] (rho^{b+1} - rho^{-b-1}) / ((rho+1/rho)^T (rho^{a+1} - rho^{-a-1}))`.
pub fn chain_transition_ln(rho: f64, steps: u64, a: u64, b: u64) -> f64 {
    let (t, a, b) = (steps as i64, a as i64, b as i64);
    if (t + b - a) % 2 != 0 {
        return f64::NEG_INFINITY;
    }
    let l1 = ln_binomial(steps, (t + b - a) / 2);
    let l2 = ln_binomial(steps, (t + a + b + 2) / 2);
    if l1 == f64::NEG_INFINITY {
        return l1;
    }
    let paths = l1 + (-(l2 - l1).exp()).ln_1p();
    let ell = -rho.ln();
    let ratio = if ell == 0.0 {
        ((b + 1) as f64 / (a + 1) as f64).ln()
    } else {
        // sinh is odd, so the sign of ell cancels
        ln_sinh((b + 1) as f64 * ell.abs()) - ln_sinh((a + 1) as f64 * ell.abs())
    };
    paths - t as f64 * (rho + 1.0 / rho).ln() + ratio
}

/// `2 sinh(vy)/sinh(vx) e^{-v^2 t/2} g_t(x, y)`, with `y/x` at `v = 0`.
pub fn kernel_limit(t: f64, x: f64, y: f64, v: f64) -> Result<f64> {
    let g = heat_kernel(t, x, y)?;
    let ratio = if v == 0.0 { y / x } else { (ln_sinh(v.abs() * y) - ln_sinh(v.abs() * x)).exp() };
    Ok(2.0 * ratio * (-v * v * t / 2.0).exp() * g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelPoint {
    pub n: u64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    /// `sqrt(N) P(X_T = y' | X_0 = x')` with even floors `T`, `x'`, `y'`.
    pub finite: f64,
    pub limit: f64,
    pub rel_err: f64,
}

pub fn kernel_limit_check(n: u64, t: f64, x: f64, y: f64, v: f64) -> Result<KernelPoint> {
    if n == 0 {
        return Err(LabError::invalid("N must be positive"));
    }
    let sqrt_n = (n as f64).sqrt();
    let rho = 1.0 - v / sqrt_n;
    if !(rho > 0.0) {
        return Err(LabError::Regime(format!("rho = 1 - v/sqrt(N) = {rho} is not positive")));
    }
    let limit = kernel_limit(t, x, y, v)?;
    let steps = even_floor(t * n as f64);
    let (a, b) = (even_floor(x * sqrt_n), even_floor(y * sqrt_n));
    let finite = sqrt_n * chain_transition_ln(rho, steps, a, b).exp();
    Ok(KernelPoint { n, t, x, y, v, finite, limit, rel_err: (finite - limit).abs() / limit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::to_f64;
    use crate::path::enumerate_paths;
    use crate::processes::{chain_path_prob, Params};

    #[test]
    fn heat_kernel_values() {
        let g = heat_kernel(1.0, 1.0, 1.0).unwrap();
        let want = (1.0 - (-2.0f64).exp()) / (2.0 * std::f64::consts::PI).sqrt();
        assert!((g - want).abs() < 1e-15);
        assert_eq!(heat_kernel(0.7, 0.3, 1.9).unwrap(), heat_kernel(0.7, 1.9, 0.3).unwrap());
        assert!(heat_kernel(1.0, 1.0, 1e-9).unwrap() < 1e-8);
        assert!(heat_kernel(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn transition_matches_path_sum() {
        // sum of exact chain path probabilities from a to b
        for rho in [crate::numeric::rat(2, 3), crate::numeric::int(1), crate::numeric::rat(5, 4)] {
            let p = Params::new(rho.clone(), crate::numeric::int(0)).unwrap();
            for a in 0..3u64 {
                for b in 0..5u64 {
                    let mut sum = 0.0;
                    for s in enumerate_paths(6, false).unwrap() {
                        if s.end() == b as i64 - a as i64 {
                            sum += to_f64(&chain_path_prob(a as i64, &s, &p).unwrap());
                        }
                    }
                    let got = chain_transition_ln(to_f64(&rho), 6, a, b).exp();
                    assert!((got - sum).abs() < 1e-13, "rho {rho} a {a} b {b}: {got} vs {sum}");
                }
            }
        }
    }

    #[test]
    fn driftless_limit_uses_ratio() {
        let a = kernel_limit(1.0, 1.0, 2.0, 0.0).unwrap();
        let b = kernel_limit(1.0, 1.0, 2.0, 1e-7).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn error_shrinks_with_n() {
        let small = kernel_limit_check(100, 1.0, 1.0, 1.0, 0.5).unwrap();
        let large = kernel_limit_check(10_000, 1.0, 1.0, 1.0, 0.5).unwrap();
        assert!(large.rel_err <= 0.05, "{large:?}");
        assert!(large.rel_err < small.rel_err);
    }
}
