//! Point predictions and intervals for the uncovered mass.
//!
//! Given the gap statistic `S_m`, the product `U * S_m` is Gamma(m, 1)
//! distributed, so every estimator here is a function of `1 / S_m` scaled by
//! a Gamma(m, 1) functional. Classical singleton-based baselines live in
//! [`baseline`].

pub mod baseline;
pub mod gamma;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use baseline::{esty_bounds, esty_interval, good_turing};
pub use gamma::{gamma_pdf, gamma_quantile, regularized_gamma_p};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    /// Set when either bound was clamped into `[0, 1]`.
    pub clamped: bool,
}

impl Interval {
    pub fn contains(&self, u: f64) -> bool {
        self.lower <= u && u <= self.upper
    }

    pub(crate) fn clamped_from(lower: f64, upper: f64, level: f64) -> Self {
        let lo = lower.clamp(0.0, 1.0);
        let hi = upper.clamp(0.0, 1.0);
        Interval {
            lower: lo,
            upper: hi,
            level,
            clamped: lo != lower || hi != upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub value: f64,
    pub clamped: bool,
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param(format!("level {level} outside (0, 1)")));
    }
    Ok(())
}

fn check_gap(s_m: f64, m: u64) -> Result<()> {
    if !(s_m > 0.0 && s_m.is_finite()) {
        return Err(Error::param(format!("gap statistic {s_m} must be positive")));
    }
    if m == 0 {
        return Err(Error::param("gap count m must be >= 1"));
    }
    Ok(())
}

/// `(m-1)/s_m` for `m >= 2` (mean-unbiased); `ln 2 / s_m` for `m = 1`
/// (median-unbiased). Clamped to at most one.
pub fn gamma_pivot_point(s_m: f64, m: u64) -> Result<PointEstimate> {
    check_gap(s_m, m)?;
    let raw = if m >= 2 {
        (m - 1) as f64 / s_m
    } else {
        std::f64::consts::LN_2 / s_m
    };
    Ok(PointEstimate {
        value: raw.min(1.0),
        clamped: raw > 1.0,
    })
}

/// Equal-tailed Gamma(m, 1) quantiles `(q_lo, q_hi)` at `level`.
pub fn pivot_quantiles(m: u64, level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    let tail = 0.5 * (1.0 - level);
    Ok((gamma_quantile(m, tail)?, gamma_quantile(m, 1.0 - tail)?))
}

/// Unclamped bounds `(q_lo / s_m, q_hi / s_m)`.
pub fn gamma_pivot_bounds(s_m: f64, m: u64, level: f64) -> Result<(f64, f64)> {
    check_gap(s_m, m)?;
    let (q_lo, q_hi) = pivot_quantiles(m, level)?;
    Ok((q_lo / s_m, q_hi / s_m))
}

/// Exact equal-tailed prediction interval, clamped into `[0, 1]`.
pub fn gamma_pivot_interval(s_m: f64, m: u64, level: f64) -> Result<Interval> {
    let (lo, hi) = gamma_pivot_bounds(s_m, m, level)?;
    Ok(Interval::clamped_from(lo, hi, level))
}
