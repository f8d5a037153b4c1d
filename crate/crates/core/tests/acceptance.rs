//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p unseen-core --test acceptance`.

use std::time::Instant;

use unseen::cli;
use unseen::embedding::{embedding_algorithm, Status};
use unseen::estimators::{esty_bounds, gamma_pivot_bounds, gamma_quantile, good_turing, pivot_quantiles, regularized_gamma_p};
use unseen::montecarlo::{Experiment, ExperimentReport, Schedule};
use unseen::{cut_exceedance_probability, Environment, Sample};

const REPS: usize = 10_000;
const SEED: u64 = 20110622;

struct Check {
    id: u32,
    name: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new(id: u32, name: &'static str) -> Self {
        Check { id, name, failures: Vec::new(), notes: Vec::new() }
    }

    fn expect(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn metric(r: &ExperimentReport, name: &str) -> (f64, f64) {
    let m = r.metric(name).unwrap_or_else(|| panic!("missing metric {name}"));
    (m.value, m.se.unwrap_or(f64::NAN))
}

fn pivot_exactness() -> Check {
    let mut c = Check::new(1, "pivot exactness (zipf:1.5:1000, n=5000, t=1000)");
    let env = Environment::power_law(1.5, 1000).unwrap();
    let start = Instant::now();
    for m in [1u64, 3, 5] {
        let r = Experiment::new(&env, 5000, 1000.0, m, REPS, SEED).pivot_law().unwrap();
        let (ks, _) = metric(&r, "ks_distance");
        let (mean, se) = metric(&r, "mean");
        c.expect(ks < 0.025, format!("m={m}: KS {ks:.4} < 0.025"));
        c.expect(
            (mean - m as f64).abs() < 3.0 * se,
            format!("m={m}: mean {mean:.4} within 3*SE ({:.4}) of {m}", 3.0 * se),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    c.expect(secs < 60.0, format!("runtime {secs:.1}s < 60s"));
    c
}

fn interval_coverage() -> Check {
    let mut c = Check::new(2, "exact interval coverage (uniform:100, n=2000, t=200, m=5)");
    let env = Environment::uniform(100).unwrap();
    for (level, tol) in [(0.95, 0.01), (0.50, 0.02)] {
        let r = Experiment::new(&env, 2000, 200.0, 5, REPS, SEED).with_level(level).coverage().unwrap();
        let (cov, _) = metric(&r, "coverage");
        c.expect(
            (cov - level).abs() <= tol,
            format!("level {level}: coverage {cov:.4} within ±{tol}"),
        );
    }
    c
}

fn constant_log_length() -> Check {
    let mut c = Check::new(3, "constant log-length over 1000 successful predictions");
    let env = Environment::uniform(100).unwrap();
    let (m, level) = (5u64, 0.95);
    let (q_lo, q_hi) = pivot_quantiles(m, level).unwrap();
    let target = (q_hi / q_lo).ln();
    let mut raw = Vec::new();
    let mut reported = Vec::new();
    let mut seed = 0u64;
    while raw.len() < 1000 {
        let sample = env.draw_sample(2000, seed);
        let p = embedding_algorithm(&sample, 200.0, m, level, seed).unwrap();
        seed += 1;
        if p.status != Status::Ok {
            continue;
        }
        let (lo, hi) = gamma_pivot_bounds(p.s_m.unwrap(), m, level).unwrap();
        raw.push(hi.ln() - lo.ln());
        if !p.clamped.unwrap() {
            reported.push(p.upper.unwrap().ln() - p.lower.unwrap().ln());
        }
    }
    let dev = |v: &[f64]| v.iter().map(|x| (x - target).abs()).fold(0.0, f64::max);
    let (d_raw, d_rep) = (dev(&raw), dev(&reported));
    c.expect(d_raw < 1e-12, format!("max |log-length - ln(q_hi/q_lo)| {d_raw:.1e} before clamping"));
    c.expect(
        d_rep < 1e-12,
        format!("{} unclamped reported intervals: max deviation {d_rep:.1e}", reported.len()),
    );
    c
}

fn conditional_unbiasedness() -> Check {
    let mut c = Check::new(4, "conditional unbiasedness (geom:0.1, n=2000, t=1000, m=5)");
    let env = Environment::geometric(0.1, 1e-12).unwrap();
    let r = Experiment::new(&env, 2000, 1000.0, 5, REPS, SEED).bias().unwrap();
    let (err, se) = metric(&r, "mean_error");
    let (fail, _) = metric(&r, "failure_rate");
    c.expect(
        err.abs() < 3.0 * se,
        format!("|mean error| {:.3e} < 3*SE {:.3e} (failure rate {fail:.4})", err.abs(), 3.0 * se),
    );
    c
}

fn fixed_n_effect() -> Check {
    let mut c = Check::new(5, "fixed-n effect: cut-exceeds rate vs analytic Poisson tail");
    let env = Environment::uniform(100).unwrap();
    let n = 100;
    let grid = [80.0, 90.0, 100.0, 110.0, 120.0];
    let r = Experiment::new(&env, n, grid[0], 1, REPS, SEED)
        .with_level(0.95)
        .fixed_n_effect(&grid)
        .unwrap();
    for row in &r.rows {
        let analytic = cut_exceedance_probability(n as u64, row.t);
        let se = (analytic * (1.0 - analytic) / REPS as f64).sqrt();
        c.expect(
            (row.rate_cut_exceeds_sample - analytic).abs() <= 3.0 * se,
            format!("t={}: empirical {:.4} vs analytic {analytic:.4} (3*SE {:.4})", row.t, row.rate_cut_exceeds_sample, 3.0 * se),
        );
    }
    c
}

fn baselines() -> Check {
    let mut c = Check::new(6, "baseline sanity (Good–Turing, Esty) vs exact pivot");
    let sample = Sample::from_tokens(["a", "b", "a", "c"]).unwrap();
    let gt = good_turing(&sample).unwrap();
    c.expect(gt == 0.5, format!("Good–Turing(a,b,a,c) = {gt}"));

    // f1 = 2 (b, c), f2 = 1 (a), n = 4.
    let z = 1.959963984540054;
    let hand = z * (2.0f64 * (1.0 - 2.0 / 4.0) + 2.0 * 1.0).sqrt() / 4.0;
    let (center, half) = esty_bounds(&sample, 0.95).unwrap();
    c.expect(
        (center - 0.5).abs() < 1e-9 && (half - hand).abs() < 1e-9,
        format!("Esty center {center}, half-width {half:.9} vs closed form {hand:.9}"),
    );

    let env = Environment::uniform(1000).unwrap();
    let esty = Experiment::new(&env, 500, 250.0, 5, REPS, SEED).esty_coverage().unwrap();
    let (cov, _) = metric(&esty, "coverage");
    c.expect((cov - 0.95).abs() <= 0.03, format!("Esty coverage {cov:.4} within ±0.03"));
    let pivot = Experiment::new(&env, 500, 250.0, 5, REPS, SEED).coverage().unwrap();
    let (cov, _) = metric(&pivot, "coverage");
    c.expect((cov - 0.95).abs() <= 0.01, format!("pivot coverage {cov:.4} within ±0.01"));
    c
}

fn numerics() -> Check {
    let mut c = Check::new(7, "gamma quantile / CDF inverse pair on a 100-point grid");
    let mut worst_p = 0.0f64;
    let mut worst_x = 0.0f64;
    for m in 1..=20u64 {
        for i in 0..100 {
            let p = 0.001 + 0.998 * i as f64 / 99.0;
            let x = gamma_quantile(m, p).unwrap();
            let back = regularized_gamma_p(m, x).unwrap();
            worst_p = worst_p.max((back - p).abs());
            let x2 = gamma_quantile(m, back).unwrap();
            worst_x = worst_x.max((x2 - x).abs() / x.max(1.0));
        }
    }
    c.expect(worst_p < 1e-9, format!("max |P(Q(p)) - p| = {worst_p:.1e}"));
    c.expect(worst_x < 1e-9, format!("max relative |Q(P(x)) - x| = {worst_x:.1e}"));
    c
}

fn determinism() -> Check {
    let mut c = Check::new(8, "determinism of CLI output and Monte Carlo reports");
    let dir = tempfile::tempdir().unwrap();
    let sample_path = dir.path().join("s.txt");
    let env = Environment::power_law(1.2, 300).unwrap();
    let sample = env.draw_sample(400, 5);
    std::fs::write(&sample_path, sample.tokens().collect::<Vec<_>>().join("\n")).unwrap();
    let path = sample_path.to_str().unwrap();
    let invocations: Vec<Vec<&str>> = vec![
        vec!["unseen", "predict", "--sample", path, "--t", "10", "--m", "1", "--seed", "7"],
        vec!["unseen", "predict", "--sample", path, "--output", "csv"],
        vec!["unseen", "simulate", "--env", "uniform:100", "--n", "2000", "--t", "200", "--m", "5", "--level", "0.95", "--seed", "1"],
        vec!["unseen", "validate", "--env", "zipf:1.5:200", "--experiment", "coverage", "--n", "500", "--reps", "300", "--seed", "3"],
        vec!["unseen", "validate", "--env", "uniform:50", "--experiment", "fixed-n", "--n", "60", "--m", "1", "--reps", "200", "--output", "csv"],
        vec!["unseen", "env-info", "--env", "geom:0.3"],
    ];
    for argv in &invocations {
        let a = cli::run(argv.iter().copied());
        let b = cli::run(argv.iter().copied());
        c.expect(
            a == b && !a.stdout.is_empty(),
            format!("`{}` byte-identical ({} bytes)", argv[1..].join(" "), a.stdout.len()),
        );
    }
    let bin = env!("CARGO_BIN_EXE_unseen");
    let run_bin = || std::process::Command::new(bin).args(&invocations[0][1..]).output().unwrap();
    let (x, y) = (run_bin(), run_bin());
    c.expect(x.stdout == y.stdout && x.status == y.status, "binary `predict` byte-identical".into());

    let zipf = Environment::power_law(1.5, 1000).unwrap();
    let base = Experiment::new(&zipf, 1000, 300.0, 3, 2000, 99);
    let reports: Vec<_> = [Schedule::Parallel, Schedule::Sequential, Schedule::Reversed]
        .into_iter()
        .map(|s| {
            let e = base.clone().with_schedule(s);
            (e.pivot_law().unwrap(), e.coverage().unwrap(), e.bias().unwrap())
        })
        .collect();
    c.expect(
        reports.iter().all(|r| r == &reports[0]),
        "pivot/coverage/bias reports identical under parallel, sequential and reversed execution".into(),
    );
    c
}

fn main() {
    let checks: Vec<fn() -> Check> = vec![
        pivot_exactness,
        interval_coverage,
        constant_log_length,
        conditional_unbiasedness,
        fixed_n_effect,
        baselines,
        numerics,
        determinism,
    ];
    let mut failed = 0;
    for run in checks {
        let c = run();
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        println!("criterion {}: {verdict}  {}", c.id, c.name);
        for n in &c.notes {
            println!("    ok    {n}");
        }
        for f in &c.failures {
            println!("    FAIL  {f}");
        }
        if !c.passed() {
            failed += 1;
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
