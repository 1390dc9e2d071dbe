//! Distribution function of a normal law truncated to `[a, b]`.
//!
//! Tail probabilities are handled on the log scale so that truncation
//! intervals far in either tail do not produce `0/0`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::error::{invalid, Error, Result};

/// Above this the upper-tail probability is taken from its asymptotic series.
const ASYMPTOTIC_FROM: f64 = 30.0;

/// `ln P(Z > z)` for a standard normal `Z`.
pub fn log_upper_tail(z: f64) -> f64 {
    if z == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if z <= ASYMPTOTIC_FROM {
        return (0.5 * erfc(z * FRAC_1_SQRT_2)).ln();
    }
    // Mills ratio: Q(z) = φ(z)/z · (1 − 1/z² + 3/z⁴ − 15/z⁶ + 105/z⁸ − …)
    let w = 1.0 / (z * z);
    let series = 1.0 - w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w)));
    -0.5 * z * z - z.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// Standard normal distribution function.
pub fn phi_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

pub fn truncnorm_cdf(x: f64, mu: f64, sigma: f64, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidTruncation { lower: a, upper: b });
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return invalid(format!("sigma must be positive and finite, got {sigma}"));
    }
    if x.is_nan() || mu.is_nan() {
        return Err(Error::NonFinite("truncated normal argument"));
    }
    if x <= a {
        return Ok(0.0);
    }
    if x >= b {
        return Ok(1.0);
    }
    let (lo, hi, z) = ((a - mu) / sigma, (b - mu) / sigma, (x - mu) / sigma);
    Ok(standard(z, lo, hi).clamp(0.0, 1.0))
}

/// CDF of a standard normal truncated to `[lo, hi]`, at `lo < z < hi`.
fn standard(z: f64, lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        // Upper tail: F = (Q(lo) − Q(z)) / (Q(lo) − Q(hi)).
        let (la, lz, lb) = (log_upper_tail(lo), log_upper_tail(z), log_upper_tail(hi));
        (-(lz - la).exp_m1()) / (-(lb - la).exp_m1())
    } else if hi <= 0.0 {
        // Lower tail, by symmetry: Φ(t) = Q(−t).
        let (la, lz, lb) = (log_upper_tail(-lo), log_upper_tail(-z), log_upper_tail(-hi));
        (lz - lb).exp() * (-(la - lz).exp_m1()) / (-(la - lb).exp_m1())
    } else {
        let (pa, pb) = (phi_cdf(lo), phi_cdf(hi));
        let pz = phi_cdf(z);
        (pz - pa) / (pb - pa)
    }
}

/// The `μ` solving `F_{μ,σ²}^{[a,b]}(x) = target`, by bisection.
///
/// The map `μ ↦ F` is decreasing, so the root is unique.
pub fn solve_mean(x: f64, sigma: f64, a: f64, b: f64, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return invalid(format!("target probability {target} must lie in (0, 1)"));
    }
    let f = |mu: f64| truncnorm_cdf(x, mu, sigma, a, b);
    let mut step = 10.0 * sigma;
    let (mut lo, mut hi) = (x - step, x + step);
    for _ in 0..200 {
        if f(lo)? >= target {
            break;
        }
        hi = lo;
        step *= 2.0;
        lo -= step;
    }
    step = 10.0 * sigma;
    for _ in 0..200 {
        if f(hi)? <= target {
            break;
        }
        lo = hi;
        step *= 2.0;
        hi += step;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if (v - target).abs() < 1e-13 {
            return Ok(mid);
        }
        if v > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
