//! Poissonization of a fixed-size sample and the gap statistic.
//!
//! Draws are placed at the arrival times of a unit-rate Poisson process. The
//! labels seen by a cut time `t` are frozen; afterwards every arrival whose
//! label lies outside that frozen set qualifies, repeats included, so the
//! qualifying arrivals form a Poisson process of rate exactly `U(t)`. The wait
//! `S_m` from `t` to the `m`-th qualifying arrival then satisfies
//! `U(t) * S_m ~ Gamma(m, 1)`.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Sample;
use crate::error::{Error, Result};
use crate::estimators::{self, gamma};
use crate::rng;

pub const DEFAULT_M: u64 = 5;
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Cut time used when only the sample size is known.
pub fn default_cut_time(n: usize) -> f64 {
    n as f64 / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    InsufficientSample,
    CutExceedsSample,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::InsufficientSample => "insufficient-sample",
            Status::CutExceedsSample => "cut-exceeds-sample",
        }
    }

    pub fn is_ok(self) -> bool {
        self == Status::Ok
    }
}

/// A sample paired with strictly increasing arrival times.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSample {
    sample: Sample,
    times: Vec<f64>,
}

impl EmbeddedSample {
    pub fn new(sample: Sample, times: Vec<f64>) -> Result<Self> {
        if sample.len() != times.len() {
            return Err(Error::InvalidInput(format!(
                "{} draws but {} arrival times",
                sample.len(),
                times.len()
            )));
        }
        if times.first().is_some_and(|&t0| !(t0 > 0.0)) {
            return Err(Error::InvalidInput("arrival times must be positive".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("arrival times must be strictly increasing".into()));
        }
        Ok(EmbeddedSample { sample, times })
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `N(t)`, the number of arrivals at or before `t`.
    pub fn count_before(&self, t: f64) -> usize {
        self.times.partition_point(|&x| x <= t)
    }

    /// Wait from `t` to the `m`-th arrival of a label outside the frozen set.
    pub fn novel_gap_statistic(&self, t: f64, m: u64) -> Result<GapResult> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::param(format!("cut time {t} must be positive")));
        }
        if m == 0 {
            return Err(Error::param("gap count m must be >= 1"));
        }
        let n = self.len();
        let cut = self.count_before(t);
        let failed = |status| GapResult {
            s_m: None,
            m,
            consumed: n,
            subsample_size: cut,
            status,
        };
        if cut >= n {
            return Ok(failed(Status::CutExceedsSample));
        }
        let ids = self.sample.ids();
        let mut frozen = vec![false; self.sample.vocabulary().len()];
        for &id in &ids[..cut] {
            frozen[id as usize] = true;
        }
        let mut qualifying = 0u64;
        for (i, &id) in ids.iter().enumerate().skip(cut) {
            if !frozen[id as usize] {
                qualifying += 1;
                if qualifying == m {
                    return Ok(GapResult {
                        s_m: Some(self.times[i] - t),
                        m,
                        consumed: i + 1,
                        subsample_size: cut,
                        status: Status::Ok,
                    });
                }
            }
        }
        Ok(failed(Status::InsufficientSample))
    }
}

/// Place `sample` on a unit-rate Poisson timeline: times are cumulative sums
/// of i.i.d. Exp(1) gaps drawn from the arrival stream of `seed`.
pub fn poissonize(sample: &Sample, seed: u64) -> Result<EmbeddedSample> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut rng = rng::stream(seed, rng::ARRIVAL_STREAM);
    let mut clock = 0.0f64;
    let times = (0..sample.len())
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            clock += -u.ln();
            clock
        })
        .collect();
    EmbeddedSample::new(sample.clone(), times)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapResult {
    /// Elapsed time from the cut to the `m`-th qualifying arrival.
    pub s_m: Option<f64>,
    pub m: u64,
    /// One past the index of the last observation used.
    pub consumed: usize,
    /// `N(t)`; the frozen set is the labels of the first `subsample_size` draws.
    pub subsample_size: usize,
    pub status: Status,
}

/// A prediction of the uncovered mass `U(t)` of the size-`N(t)` subsample.
///
/// Estimate fields are `None` unless `status` is [`Status::Ok`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::sig10::opt")]
    pub point: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::sig10::opt")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::sig10::opt")]
    pub upper: Option<f64>,
    #[serde(with = "crate::io::sig10")]
    pub level: f64,
    #[serde(with = "crate::io::sig10")]
    pub t: f64,
    pub m: u64,
    pub subsample_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consumed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamped: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::sig10::opt")]
    pub s_m: Option<f64>,
}

impl Prediction {
    pub fn interval(&self) -> Option<estimators::Interval> {
        Some(estimators::Interval {
            lower: self.lower?,
            upper: self.upper?,
            level: self.level,
            clamped: self.clamped.unwrap_or(false),
        })
    }
}

/// Turn a gap result into a prediction.
pub fn predict_from_gap(gap: &GapResult, t: f64, level: f64) -> Result<Prediction> {
    let mut prediction = Prediction {
        status: gap.status,
        point: None,
        lower: None,
        upper: None,
        level,
        t,
        m: gap.m,
        subsample_size: gap.subsample_size,
        consumed: None,
        clamped: None,
        s_m: None,
    };
    let Some(s_m) = gap.s_m else {
        estimators::check_level(level)?;
        return Ok(prediction);
    };
    let point = estimators::gamma_pivot_point(s_m, gap.m)?;
    let interval = estimators::gamma_pivot_interval(s_m, gap.m, level)?;
    // Ordering is guaranteed by the Gamma(m, 1) quartiles bracketing m - 1.
    if level >= 0.5 && gap.m >= 2 {
        assert!(
            0.0 < interval.lower && interval.lower <= point.value && point.value <= interval.upper,
            "pivot ordering violated: {interval:?} vs {point:?}"
        );
    }
    prediction.point = Some(point.value);
    prediction.lower = Some(interval.lower);
    prediction.upper = Some(interval.upper);
    prediction.consumed = Some(gap.consumed);
    prediction.clamped = Some(point.clamped || interval.clamped);
    prediction.s_m = Some(s_m);
    Ok(prediction)
}

/// Poissonize `sample`, freeze the seen set at `t`, wait for `m` novel
/// arrivals and predict `U(t)`. Gap failures come back as a status, not an
/// error.
pub fn embedding_algorithm(sample: &Sample, t: f64, m: u64, level: f64, seed: u64) -> Result<Prediction> {
    estimators::check_level(level)?;
    let embedded = poissonize(sample, seed)?;
    let gap = embedded.novel_gap_statistic(t, m)?;
    predict_from_gap(&gap, t, level)
}

/// `P(Poisson(t) >= n)`: the chance that a cut at `t` swallows all `n` draws.
pub fn cut_exceedance_probability(n: u64, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if !(t > 0.0) {
        return 0.0;
    }
    // N(t) >= n iff the n-th arrival (Gamma(n, 1)) is at or before t.
    gamma::regularized_gamma_p(n, t).expect("validated arguments")
}
