//! Singleton-based baselines: the Good–Turing coverage estimate and Esty's
//! normal-approximation interval around it.

use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_level, Interval};
use crate::environment::Sample;
use crate::error::{Error, Result};

/// `f_1 / n`, the fraction of draws whose label appears exactly once.
pub fn good_turing(sample: &Sample) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let f1 = sample.frequency_of_frequency(1);
    Ok(f1 as f64 / sample.len() as f64)
}

/// Standard normal quantile.
pub(crate) fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Center `f1/n` and half-width `z * sqrt(f1 (1 - f1/n) + 2 f2) / n` of
/// Esty's interval, before clamping.
pub fn esty_bounds(sample: &Sample, level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let abundances = sample.abundances();
    let f1 = abundances.iter().filter(|&&c| c == 1).count() as f64;
    let f2 = abundances.iter().filter(|&&c| c == 2).count() as f64;
    let n = sample.len() as f64;
    let center = f1 / n;
    let z = normal_quantile(0.5 * (1.0 + level));
    Ok((center, z * (f1 * (1.0 - center) + 2.0 * f2).sqrt() / n))
}

/// Esty's interval clamped to `[0, 1]`.
pub fn esty_interval(sample: &Sample, level: f64) -> Result<Interval> {
    let (center, half) = esty_bounds(sample, level)?;
    Ok(Interval::clamped_from(center - half, center + half, level))
}
