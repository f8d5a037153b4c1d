//! Integer-shape gamma (Erlang) distribution numerics.

use crate::error::{Error, Result};

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn check_shape(m: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::param("gamma shape must be >= 1"));
    }
    Ok(())
}

/// Regularized lower incomplete gamma `P(m, x)` for integer shape `m`.
///
/// For `x < m` the lower series `e^{-x} sum_{k>=m} x^k/k!` is summed; otherwise
/// `1 - e^{-x} sum_{k<m} x^k/k!`. All terms are formed in log space.
pub fn regularized_gamma_p(m: u64, x: f64) -> Result<f64> {
    check_shape(m)?;
    if !(x >= 0.0) {
        return Err(Error::param(format!("gamma argument {x} must be >= 0")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let ln_x = x.ln();
    let mf = m as f64;
    if x < mf {
        let lead = mf * ln_x - x - ln_factorial(m);
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut j = 1.0f64;
        loop {
            term *= x / (mf + j);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            j += 1.0;
        }
        Ok((lead + sum.ln()).exp().min(1.0))
    } else {
        let mut log_term = -x;
        let mut upper = log_term.exp();
        for k in 1..m {
            log_term += ln_x - (k as f64).ln();
            upper += log_term.exp();
        }
        Ok((1.0 - upper).clamp(0.0, 1.0))
    }
}

/// Density of Gamma(m, 1) at `x`.
pub fn gamma_pdf(m: u64, x: f64) -> f64 {
    if x <= 0.0 {
        return if m == 1 && x == 0.0 { 1.0 } else { 0.0 };
    }
    ((m as f64 - 1.0) * x.ln() - x - ln_factorial(m - 1)).exp()
}

/// Quantile of Gamma(m, 1): bracketing bisection, then guarded Newton steps.
pub fn gamma_quantile(m: u64, p: f64) -> Result<f64> {
    check_shape(m)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("quantile level {p} outside (0, 1)")));
    }
    let mut lo = 0.0f64;
    let mut hi = (m as f64).max(1.0);
    while regularized_gamma_p(m, hi)? < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if regularized_gamma_p(m, mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let f = regularized_gamma_p(m, x)? - p;
        let d = gamma_pdf(m, x);
        if d <= 0.0 || f == 0.0 {
            break;
        }
        let next = x - f / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        x = next;
    }
    Ok(x)
}
