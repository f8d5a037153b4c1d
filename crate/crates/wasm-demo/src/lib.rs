//! wasm-bindgen exports backing `www/index.html`.
//!
//! Each export returns a JSON string; the page draws it on a canvas. The
//! `*_json` functions hold the logic so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use unseen::embedding::{embedding_algorithm, Prediction};
use unseen::estimators::{gamma_pdf, good_turing, pivot_quantiles, regularized_gamma_p};
use unseen::montecarlo::{ks_statistic, Experiment, FixedNRow};
use unseen::{cut_exceedance_probability, poissonize, Environment};

type DemoResult = Result<String, String>;

fn env(spec: &str) -> Result<Environment, String> {
    Environment::from_descriptor(spec).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Simulation<'a> {
    true_u: f64,
    true_u_full: f64,
    good_turing: f64,
    log_length: Option<f64>,
    prediction: &'a Prediction,
}

pub fn simulate_json(spec: &str, n: usize, t: f64, m: u32, level: f64, seed: u32) -> DemoResult {
    let env = env(spec)?;
    if n == 0 {
        return Err("n must be at least 1".into());
    }
    let sample = env.draw_sample(n, seed.into());
    let p = embedding_algorithm(&sample, t, m.into(), level, seed.into()).map_err(|e| e.to_string())?;
    let log_length = pivot_quantiles(m.into(), level)
        .ok()
        .map(|(lo, hi)| (hi / lo).ln());
    let sim = Simulation {
        true_u: env.uncovered_mass_of_prefix(&sample, p.subsample_size),
        true_u_full: env.uncovered_mass_of_prefix(&sample, n),
        good_turing: good_turing(&sample).map_err(|e| e.to_string())?,
        log_length,
        prediction: &p,
    };
    Ok(serde_json::to_string(&sim).expect("serializable"))
}

#[derive(Serialize)]
struct Histogram {
    edges: Vec<f64>,
    density: Vec<f64>,
    gamma_x: Vec<f64>,
    gamma_pdf: Vec<f64>,
    ks: f64,
    successes: usize,
    replicates: usize,
}

/// Histogram of `U(t) * S_m` over replicates against the Gamma(m, 1) density.
pub fn pivot_histogram_json(spec: &str, n: usize, t: f64, m: u32, reps: usize, seed: u32, bins: usize) -> DemoResult {
    let env = env(spec)?;
    if n == 0 || reps == 0 || bins == 0 || m == 0 || t.is_nan() || t <= 0.0 {
        return Err("n, reps, bins, m and t must be positive".into());
    }
    let m = u64::from(m);
    let mut products = Vec::with_capacity(reps);
    for i in 0..reps {
        let seed = unseen::rng::replicate_seed(seed.into(), i as u64);
        let sample = env.draw_sample(n, seed);
        let gap = poissonize(&sample, seed)
            .and_then(|e| e.novel_gap_statistic(t, m))
            .map_err(|e| e.to_string())?;
        if let Some(s) = gap.s_m {
            products.push(env.uncovered_mass_of_prefix(&sample, gap.subsample_size) * s);
        }
    }
    let hi = unseen::gamma_quantile(m, 0.999).map_err(|e| e.to_string())?;
    let width = hi / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in &products {
        if v < hi {
            counts[((v / width) as usize).min(bins - 1)] += 1;
        }
    }
    let total = products.len().max(1) as f64;
    let ks = if products.is_empty() {
        f64::NAN
    } else {
        ks_statistic(&products, |x| regularized_gamma_p(m, x.max(0.0)).unwrap_or(f64::NAN)).map_err(|e| e.to_string())?
    };
    let gamma_x: Vec<f64> = (0..=200).map(|i| hi * i as f64 / 200.0).collect();
    let h = Histogram {
        edges: (0..=bins).map(|i| i as f64 * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (total * width)).collect(),
        gamma_pdf: gamma_x.iter().map(|&x| gamma_pdf(m, x)).collect(),
        gamma_x,
        ks,
        successes: products.len(),
        replicates: reps,
    };
    Ok(serde_json::to_string(&h).expect("serializable"))
}

#[derive(Serialize)]
struct Curve {
    rows: Vec<FixedNRow>,
    analytic_t: Vec<f64>,
    analytic: Vec<f64>,
}

/// Failure rates across cut times from `0.1 n` to `1.3 n`, with the analytic
/// cut-exceedance tail.
pub fn failure_curve_json(spec: &str, n: usize, m: u32, level: f64, reps: usize, seed: u32, points: usize) -> DemoResult {
    let env = env(spec)?;
    if n == 0 || points < 2 {
        return Err("n must be positive and points at least 2".into());
    }
    let nf = n as f64;
    let grid: Vec<f64> = (0..points)
        .map(|i| nf * (0.1 + 1.2 * i as f64 / (points - 1) as f64))
        .collect();
    let report = Experiment::new(&env, n, grid[0], m.into(), reps, seed.into())
        .with_level(level)
        .fixed_n_effect(&grid)
        .map_err(|e| e.to_string())?;
    let analytic_t: Vec<f64> = (0..=200).map(|i| nf * (0.1 + 1.2 * i as f64 / 200.0)).collect();
    let curve = Curve {
        analytic: analytic_t.iter().map(|&t| cut_exceedance_probability(n as u64, t)).collect(),
        analytic_t,
        rows: report.rows,
    };
    Ok(serde_json::to_string(&curve).expect("serializable"))
}

#[wasm_bindgen]
pub fn simulate(spec: &str, n: usize, t: f64, m: u32, level: f64, seed: u32) -> Result<String, JsValue> {
    simulate_json(spec, n, t, m, level, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn pivot_histogram(spec: &str, n: usize, t: f64, m: u32, reps: usize, seed: u32, bins: usize) -> Result<String, JsValue> {
    pivot_histogram_json(spec, n, t, m, reps, seed, bins).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn failure_curve(spec: &str, n: usize, m: u32, level: f64, reps: usize, seed: u32, points: usize) -> Result<String, JsValue> {
    failure_curve_json(spec, n, m, level, reps, seed, points).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn simulate_reports_prediction_and_truth() {
        let v: Value = serde_json::from_str(&simulate_json("uniform:100", 2000, 200.0, 5, 0.95, 1).unwrap()).unwrap();
        assert_eq!(v["prediction"]["status"], "ok");
        assert!(v["true_u"].as_f64().unwrap() > 0.0);
        assert!(simulate_json("bogus:1", 10, 1.0, 1, 0.9, 0).is_err());
    }

    #[test]
    fn histogram_is_a_density() {
        let v: Value = serde_json::from_str(&pivot_histogram_json("zipf:1.5:500", 2000, 400.0, 3, 2000, 2, 30).unwrap()).unwrap();
        let edges = v["edges"].as_array().unwrap();
        let width = edges[1].as_f64().unwrap() - edges[0].as_f64().unwrap();
        let mass: f64 = v["density"].as_array().unwrap().iter().map(|d| d.as_f64().unwrap() * width).sum();
        assert!(mass > 0.99 && mass <= 1.0 + 1e-9, "{mass}");
        assert!(v["ks"].as_f64().unwrap() < 0.06);
    }

    #[test]
    fn failure_curve_rows() {
        let v: Value = serde_json::from_str(&failure_curve_json("uniform:50", 80, 1, 0.9, 300, 3, 6).unwrap()).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 6);
        assert_eq!(v["analytic"].as_array().unwrap().len(), 201);
    }
}
