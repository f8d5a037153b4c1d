//! Simulation harness for the distributional claims of the embedding:
//! the Gamma pivot law, interval coverage, conditional unbiasedness and the
//! failure rate induced by a fixed sample size.
//!
//! Replicate `i` of an experiment with master seed `s` draws its sample and
//! its arrival times from [`rng::replicate_seed`]`(s, i)`. Outcomes are stored
//! by replicate index and aggregated in index order, so a report does not
//! depend on how replicates were scheduled.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embedding::{self, cut_exceedance_probability, poissonize, Status};
use crate::environment::{Environment, Sample};
use crate::error::{Error, Result};
use crate::estimators::{self, regularized_gamma_p};
use crate::io::sig10;
use crate::rng;

pub const MIN_REPLICATES: usize = 100;
pub const MIN_SUCCESSES: usize = 100;
pub const MIN_BIAS_REPLICATES: usize = 1000;

pub const ESTY_TOLERANCE: f64 = 0.03;

/// KS tolerance is `KS_SCALE / sqrt(N)`: 0.025 at N = 10,000.
pub const KS_SCALE: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    #[serde(with = "sig10")]
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "sig10::opt")]
    pub se: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "sig10::opt")]
    pub target: Option<f64>,
    /// Maximum allowed `|value - target|`, or the upper bound when there is no
    /// target.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "sig10::opt")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl Metric {
    pub fn info(value: f64, se: Option<f64>) -> Self {
        Metric {
            value,
            se,
            target: None,
            tolerance: None,
            pass: None,
        }
    }

    pub fn near(value: f64, se: Option<f64>, target: f64, tolerance: f64) -> Self {
        Metric {
            value,
            se,
            target: Some(target),
            tolerance: Some(tolerance),
            pass: Some((value - target).abs() <= tolerance),
        }
    }

    pub fn below(value: f64, bound: f64) -> Self {
        Metric {
            value,
            se: None,
            target: None,
            tolerance: Some(bound),
            pass: Some(value < bound),
        }
    }
}

/// One cut time of a fixed-sample-size sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedNRow {
    #[serde(with = "sig10")]
    pub t: f64,
    pub replicates: usize,
    pub successes: usize,
    #[serde(with = "sig10")]
    pub rate_ok: f64,
    #[serde(with = "sig10")]
    pub rate_insufficient_sample: f64,
    #[serde(with = "sig10")]
    pub rate_cut_exceeds_sample: f64,
    /// Coverage among successes; absent when nothing succeeded.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "sig10::opt")]
    pub coverage: Option<f64>,
    #[serde(with = "sig10")]
    pub analytic_cut_exceedance: f64,
    /// Binomial standard error of the cut-exceedance rate under the analytic value.
    #[serde(with = "sig10")]
    pub cut_exceedance_se: f64,
    /// Empirical cut-exceedance rate within 3 standard errors of the analytic tail.
    pub pass: bool,
}

impl FixedNRow {
    pub fn failure_rate(&self) -> f64 {
        1.0 - self.rate_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub replicates: usize,
    pub successes: usize,
    pub metrics: BTreeMap<String, Metric>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<FixedNRow>,
    pub pass: bool,
}

impl ExperimentReport {
    fn new(name: &str, replicates: usize, successes: usize) -> Self {
        ExperimentReport {
            name: name.to_owned(),
            replicates,
            successes,
            metrics: BTreeMap::new(),
            rows: Vec::new(),
            pass: true,
        }
    }

    fn push(&mut self, name: &str, metric: Metric) {
        self.metrics.insert(name.to_owned(), metric);
    }

    fn finish(mut self) -> Self {
        self.pass = self.metrics.values().all(|m| m.pass != Some(false)) && self.rows.iter().all(|r| r.pass);
        self
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.get(name)
    }
}

/// Order in which replicates are executed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Schedule {
    /// Rayon work-stealing when the `parallel` feature is enabled.
    #[default]
    Parallel,
    Sequential,
    Reversed,
}

fn run_replicates<T, F>(reps: usize, schedule: Schedule, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match schedule {
        #[cfg(feature = "parallel")]
        Schedule::Parallel => {
            use rayon::prelude::*;
            (0..reps).into_par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        Schedule::Parallel => (0..reps).map(f).collect(),
        Schedule::Sequential => (0..reps).map(f).collect(),
        Schedule::Reversed => {
            let mut out: Vec<T> = (0..reps).rev().map(f).collect();
            out.reverse();
            out
        }
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `values` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("KS statistic of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            let i = i as f64;
            ((i + 1.0) / n - f).abs().max((i / n - f).abs())
        })
        .fold(0.0, f64::max))
}

/// Mean and standard error of the mean.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Coverage tolerance: four binomial standard errors at the nominal level,
/// never tighter than 0.01 (0.01 at level 0.95 and 0.02 at level 0.5 for
/// 10,000 successes).
pub fn coverage_tolerance(level: f64, successes: usize) -> f64 {
    (4.0 * binomial_se(level, successes)).max(0.01)
}

struct StatusTally {
    ok: usize,
    insufficient: usize,
    cut: usize,
}

impl StatusTally {
    fn of<'a>(statuses: impl Iterator<Item = &'a Status>) -> Self {
        let mut t = StatusTally { ok: 0, insufficient: 0, cut: 0 };
        for s in statuses {
            match s {
                Status::Ok => t.ok += 1,
                Status::InsufficientSample => t.insufficient += 1,
                Status::CutExceedsSample => t.cut += 1,
            }
        }
        t
    }

    fn record(&self, report: &mut ExperimentReport, reps: usize) {
        let r = reps as f64;
        report.push("failure_rate", Metric::info(1.0 - self.ok as f64 / r, None));
        report.push("rate_insufficient_sample", Metric::info(self.insufficient as f64 / r, None));
        report.push("rate_cut_exceeds_sample", Metric::info(self.cut as f64 / r, None));
    }
}

/// Everything an experiment needs besides its kind.
#[derive(Debug, Clone)]
pub struct Experiment<'a> {
    pub env: &'a Environment,
    pub n: usize,
    pub t: f64,
    pub m: u64,
    pub level: f64,
    pub reps: usize,
    pub seed: u64,
    pub schedule: Schedule,
}

struct Replicate {
    sample: Sample,
    status: Status,
    /// True uncovered mass of the frozen set.
    u: f64,
    s_m: Option<f64>,
    point: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
    clamped: bool,
}

impl<'a> Experiment<'a> {
    pub fn new(env: &'a Environment, n: usize, t: f64, m: u64, reps: usize, seed: u64) -> Self {
        Experiment {
            env,
            n,
            t,
            m,
            level: embedding::DEFAULT_LEVEL,
            reps,
            seed,
            schedule: Schedule::default(),
        }
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    fn validate(&self, min_reps: usize) -> Result<()> {
        if self.reps < min_reps {
            return Err(Error::param(format!("need at least {min_reps} replicates, got {}", self.reps)));
        }
        if self.n == 0 {
            return Err(Error::param("sample size n must be >= 1"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::param(format!("cut time {} must be positive", self.t)));
        }
        if self.m == 0 {
            return Err(Error::param("gap count m must be >= 1"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::param(format!("level {} outside (0, 1)", self.level)));
        }
        Ok(())
    }

    fn replicate(&self, index: usize, t: f64, with_interval: bool) -> Replicate {
        let seed = rng::replicate_seed(self.seed, index as u64);
        let sample = self.env.draw_sample(self.n, seed);
        let embedded = poissonize(&sample, seed).expect("n >= 1");
        let gap = embedded.novel_gap_statistic(t, self.m).expect("validated t and m");
        let u = self.env.uncovered_mass_of_prefix(&sample, gap.subsample_size);
        let mut rep = Replicate {
            sample,
            status: gap.status,
            u,
            s_m: gap.s_m,
            point: None,
            lower: None,
            upper: None,
            clamped: false,
        };
        if with_interval && gap.status.is_ok() {
            let p = embedding::predict_from_gap(&gap, t, self.level).expect("validated level");
            rep.point = p.point;
            rep.lower = p.lower;
            rep.upper = p.upper;
            rep.clamped = p.clamped.unwrap_or(false);
        }
        rep
    }

    fn run(&self, t: f64, with_interval: bool) -> Vec<Replicate> {
        run_replicates(self.reps, self.schedule, |i| self.replicate(i, t, with_interval))
    }

    fn require_successes(successes: usize) -> Result<()> {
        if successes < MIN_SUCCESSES {
            return Err(Error::InsufficientData {
                successes,
                required: MIN_SUCCESSES,
            });
        }
        Ok(())
    }

    /// Distribution of `U(t) * S_m` against Gamma(m, 1).
    pub fn pivot_law(&self) -> Result<ExperimentReport> {
        self.validate(MIN_REPLICATES)?;
        let reps = self.run(self.t, false);
        let tally = StatusTally::of(reps.iter().map(|r| &r.status));
        let products: Vec<f64> = reps
            .iter()
            .filter_map(|r| r.s_m.map(|s| r.u * s))
            .collect();
        Self::require_successes(products.len())?;
        let n_ok = products.len();
        let m = self.m;
        let ks = ks_statistic(&products, |x| regularized_gamma_p(m, x.max(0.0)).expect("m >= 1"))?;
        let (mean, se) = mean_se(&products);
        let mut report = ExperimentReport::new("pivot", self.reps, n_ok);
        report.push("ks_distance", Metric::below(ks, KS_SCALE / (n_ok as f64).sqrt()));
        report.push("mean", Metric::near(mean, Some(se), m as f64, 3.0 * se));
        tally.record(&mut report, self.reps);
        Ok(report.finish())
    }

    /// Empirical coverage of the pivot interval among successful replicates.
    pub fn coverage(&self) -> Result<ExperimentReport> {
        self.validate(MIN_REPLICATES)?;
        let reps = self.run(self.t, true);
        let tally = StatusTally::of(reps.iter().map(|r| &r.status));
        Self::require_successes(tally.ok)?;
        let ok: Vec<&Replicate> = reps.iter().filter(|r| r.status.is_ok()).collect();
        let covered = ok
            .iter()
            .filter(|r| r.lower.unwrap() <= r.u && r.u <= r.upper.unwrap())
            .count();
        let n_ok = ok.len();
        let coverage = covered as f64 / n_ok as f64;
        let log_lengths: Vec<f64> = ok
            .iter()
            .map(|r| r.upper.unwrap().ln() - r.lower.unwrap().ln())
            .collect();
        let (ll_mean, ll_se) = mean_se(&log_lengths);
        let clamps = ok.iter().filter(|r| r.clamped).count();
        let mut report = ExperimentReport::new("coverage", self.reps, n_ok);
        report.push(
            "coverage",
            Metric::near(
                coverage,
                Some(binomial_se(coverage, n_ok)),
                self.level,
                coverage_tolerance(self.level, n_ok),
            ),
        );
        report.push("mean_log_length", Metric::info(ll_mean, Some(ll_se)));
        report.push("clamp_rate", Metric::info(clamps as f64 / n_ok as f64, None));
        tally.record(&mut report, self.reps);
        Ok(report.finish())
    }

    /// Mean error of the point predictor against the true `U(t)`, with
    /// Good–Turing against the full-sample `U_n` for comparison.
    pub fn bias(&self) -> Result<ExperimentReport> {
        if self.m < 2 {
            return Err(Error::param("bias experiment needs m >= 2"));
        }
        self.validate(MIN_BIAS_REPLICATES)?;
        let reps = self.run(self.t, true);
        let tally = StatusTally::of(reps.iter().map(|r| &r.status));
        Self::require_successes(tally.ok)?;
        let errors: Vec<f64> = reps
            .iter()
            .filter_map(|r| r.point.map(|p| p - r.u))
            .collect();
        let (mean_err, se) = mean_se(&errors);
        let clamps = reps.iter().filter(|r| r.clamped).count();
        let gt_errors: Vec<f64> = reps
            .iter()
            .map(|r| {
                let gt = estimators::good_turing(&r.sample).expect("n >= 1");
                gt - self.env.uncovered_mass_of_prefix(&r.sample, r.sample.len())
            })
            .collect();
        let (gt_mean, gt_se) = mean_se(&gt_errors);
        let mut report = ExperimentReport::new("bias", self.reps, errors.len());
        report.push("mean_error", Metric::near(mean_err, Some(se), 0.0, 3.0 * se));
        report.push("mean_true_u", Metric::info(mean_se(&reps.iter().filter(|r| r.status.is_ok()).map(|r| r.u).collect::<Vec<_>>()).0, None));
        report.push("good_turing_mean_error", Metric::info(gt_mean, Some(gt_se)));
        report.push("clamp_rate", Metric::info(clamps as f64 / errors.len() as f64, None));
        tally.record(&mut report, self.reps);
        Ok(report.finish())
    }

    /// Coverage of Esty's interval for the full-sample uncovered mass `U_n`.
    /// The interval is approximate, so its tolerance is a fixed ±0.03.
    pub fn esty_coverage(&self) -> Result<ExperimentReport> {
        self.validate(MIN_REPLICATES)?;
        let hits = run_replicates(self.reps, self.schedule, |i| {
            let sample = self.env.draw_sample(self.n, rng::replicate_seed(self.seed, i as u64));
            let iv = estimators::esty_interval(&sample, self.level).expect("validated level");
            iv.contains(self.env.uncovered_mass_of_prefix(&sample, self.n))
        });
        let coverage = hits.iter().filter(|&&h| h).count() as f64 / self.reps as f64;
        let mut report = ExperimentReport::new("esty-coverage", self.reps, self.reps);
        report.push(
            "coverage",
            Metric::near(coverage, Some(binomial_se(coverage, self.reps)), self.level, ESTY_TOLERANCE),
        );
        Ok(report.finish())
    }

    /// Sweep cut times, tabulating failure channels and conditional coverage
    /// against the analytic cut-exceedance tail.
    pub fn fixed_n_effect(&self, t_grid: &[f64]) -> Result<ExperimentReport> {
        if t_grid.is_empty() {
            return Err(Error::param("t grid is empty"));
        }
        for &t in t_grid {
            Experiment { t, ..self.clone() }.validate(MIN_REPLICATES)?;
        }
        let mut rows = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let reps = self.run(t, true);
            let tally = StatusTally::of(reps.iter().map(|r| &r.status));
            let r = self.reps as f64;
            let covered = reps
                .iter()
                .filter(|x| x.status.is_ok() && x.lower.unwrap() <= x.u && x.u <= x.upper.unwrap())
                .count();
            let analytic = cut_exceedance_probability(self.n as u64, t);
            let se = binomial_se(analytic, self.reps);
            let rate_cut = tally.cut as f64 / r;
            rows.push(FixedNRow {
                t,
                replicates: self.reps,
                successes: tally.ok,
                rate_ok: tally.ok as f64 / r,
                rate_insufficient_sample: tally.insufficient as f64 / r,
                rate_cut_exceeds_sample: rate_cut,
                coverage: (tally.ok > 0).then(|| covered as f64 / tally.ok as f64),
                analytic_cut_exceedance: analytic,
                cut_exceedance_se: se,
                pass: (rate_cut - analytic).abs() <= 3.0 * se,
            });
        }
        let successes = rows.iter().map(|r| r.successes).sum();
        let mut report = ExperimentReport::new("fixed-n", self.reps * rows.len(), successes);
        let max_dev = rows
            .iter()
            .map(|r| (r.rate_cut_exceeds_sample - r.analytic_cut_exceedance).abs())
            .fold(0.0, f64::max);
        report.push("max_cut_exceedance_deviation", Metric::info(max_dev, None));
        report.rows = rows;
        Ok(report.finish())
    }
}

pub fn pivot_law_experiment(env: &Environment, n: usize, t: f64, m: u64, reps: usize, seed: u64) -> Result<ExperimentReport> {
    Experiment::new(env, n, t, m, reps, seed).pivot_law()
}

pub fn coverage_experiment(
    env: &Environment,
    n: usize,
    t: f64,
    m: u64,
    level: f64,
    reps: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    Experiment::new(env, n, t, m, reps, seed).with_level(level).coverage()
}

pub fn bias_experiment(env: &Environment, n: usize, t: f64, m: u64, reps: usize, seed: u64) -> Result<ExperimentReport> {
    Experiment::new(env, n, t, m, reps, seed).bias()
}

pub fn fixed_n_effect(
    env: &Environment,
    n: usize,
    m: u64,
    level: f64,
    t_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let t0 = t_grid.first().copied().unwrap_or(1.0);
    Experiment::new(env, n, t0, m, reps, seed)
        .with_level(level)
        .fixed_n_effect(t_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::gamma_quantile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ks_hand_examples() {
        let exp_cdf = |x: f64| 1.0 - (-x).exp();
        let q = |p: f64| -(1.0f64 - p).ln();
        let d = ks_statistic(&[q(0.25), q(0.75)], exp_cdf).unwrap();
        assert!((d - 0.25).abs() < 1e-12);
        let d = ks_statistic(&[2f64.ln()], exp_cdf).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert!(ks_statistic(&[], exp_cdf).is_err());
    }

    #[test]
    fn ks_of_own_law_is_small() {
        use rand::distributions::{Distribution, Open01};
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let values: Vec<f64> = (0..10_000)
            .map(|_| {
                let u: f64 = Open01.sample(&mut rng);
                gamma_quantile(3, u).unwrap()
            })
            .collect();
        let d = ks_statistic(&values, |x| regularized_gamma_p(3, x).unwrap()).unwrap();
        assert!(d < 0.025, "{d}");
    }

    #[test]
    fn replicate_count_guards() {
        let env = Environment::uniform(10).unwrap();
        assert!(matches!(pivot_law_experiment(&env, 50, 10.0, 1, 99, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(bias_experiment(&env, 50, 10.0, 2, 999, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(bias_experiment(&env, 50, 10.0, 1, 1000, 0), Err(Error::InvalidParameter(_))));
        assert!(fixed_n_effect(&env, 50, 1, 0.9, &[], 100, 0).is_err());
    }

    #[test]
    fn single_species_bias_has_no_successes() {
        let env = Environment::uniform(1).unwrap();
        let err = bias_experiment(&env, 200, 50.0, 5, 1000, 3).unwrap_err();
        assert_eq!(err, Error::InsufficientData { successes: 0, required: MIN_SUCCESSES });
    }

    #[test]
    fn small_pivot_run_is_sane() {
        let env = Environment::power_law(1.0, 200).unwrap();
        let r = pivot_law_experiment(&env, 1000, 200.0, 1, 2000, 5).unwrap();
        assert!(r.successes <= r.replicates);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn schedules_agree() {
        let env = Environment::power_law(1.3, 300).unwrap();
        let base = Experiment::new(&env, 600, 150.0, 3, 300, 12).with_level(0.9);
        let runs: Vec<ExperimentReport> = [Schedule::Parallel, Schedule::Sequential, Schedule::Reversed]
            .into_iter()
            .map(|s| base.clone().with_schedule(s).coverage().unwrap())
            .collect();
        assert_eq!(runs[0], runs[1]);
        assert_eq!(runs[0], runs[2]);
    }

    #[test]
    fn coverage_tolerances() {
        assert!((coverage_tolerance(0.95, 10_000) - 0.01).abs() < 1e-12);
        assert!((coverage_tolerance(0.5, 10_000) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn cut_rate_tracks_analytic_tail() {
        let env = Environment::uniform(50).unwrap();
        let r = fixed_n_effect(&env, 40, 2, 0.9, &[10.0, 40.0, 60.0], 2000, 1).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.pass), "{:?}", r.rows);
        assert!(r.rows[2].failure_rate() > 0.5);
    }
}
