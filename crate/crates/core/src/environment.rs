//! Urn compositions and sampling with replacement.
//!
//! An [`Environment`] is a finite probability vector over opaque species
//! labels. Labels live in a shared [`Vocabulary`] so that samples drawn from an
//! environment carry compact integer ids and can be matched back to it cheaply.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Absolute tolerance on the total mass of an environment.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Default residual tail mass at which geometric environments are truncated.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Upper bound on the number of species a truncated family may produce.
pub const MAX_SPECIES: usize = 10_000_000;

/// Pairwise-distinct species labels, addressed by dense `u32` ids.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::default();
        for label in labels {
            let label = label.into();
            if label.is_empty() {
                return Err(Error::InvalidInput("empty species label".into()));
            }
            if vocab.index.contains_key(&label) {
                return Err(Error::InvalidInput(format!("duplicate species label `{label}`")));
            }
            vocab.push(label);
        }
        Ok(vocab)
    }

    fn push(&mut self, label: String) -> u32 {
        let id = self.labels.len() as u32;
        self.index.insert(label.clone(), id);
        self.labels.push(label);
        id
    }

    fn intern(&mut self, label: &str) -> u32 {
        match self.index.get(label) {
            Some(&id) => id,
            None => self.push(label.to_owned()),
        }
    }

    pub fn id(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// An ordered sequence of draws.
#[derive(Debug, Clone)]
pub struct Sample {
    vocab: Arc<Vocabulary>,
    draws: Vec<u32>,
}

impl Sample {
    /// Build a sample from raw tokens, interning labels in order of first
    /// appearance.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocabulary::default();
        let mut draws = Vec::new();
        for token in tokens {
            let token = token.as_ref();
            if token.is_empty() {
                return Err(Error::InvalidInput("empty token in sample".into()));
            }
            draws.push(vocab.intern(token));
        }
        Ok(Sample {
            vocab: Arc::new(vocab),
            draws,
        })
    }

    /// Build a sample from ids into an existing vocabulary.
    pub fn from_ids(vocab: Arc<Vocabulary>, draws: Vec<u32>) -> Result<Self> {
        if let Some(bad) = draws.iter().find(|&&id| id as usize >= vocab.len()) {
            return Err(Error::InvalidInput(format!("species id {bad} out of range")));
        }
        Ok(Sample { vocab, draws })
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn ids(&self) -> &[u32] {
        &self.draws
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn token(&self, i: usize) -> &str {
        self.vocab.label(self.draws[i])
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.draws.iter().map(|&id| self.vocab.label(id))
    }

    /// Number of times each vocabulary id occurs.
    pub fn abundances(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.vocab.len()];
        for &id in &self.draws {
            counts[id as usize] += 1;
        }
        counts
    }

    /// Number of labels observed exactly `k` times.
    pub fn frequency_of_frequency(&self, k: u64) -> u64 {
        self.abundances().into_iter().filter(|&c| c == k).count() as u64
    }
}

impl PartialEq for Sample {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.tokens().eq(other.tokens())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvironmentKind {
    Uniform,
    Geometric,
    PowerLaw,
    Empirical,
}

impl fmt::Display for EnvironmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvironmentKind::Uniform => "uniform",
            EnvironmentKind::Geometric => "geometric",
            EnvironmentKind::PowerLaw => "power-law",
            EnvironmentKind::Empirical => "empirical",
        })
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// The urn: species labels with strictly positive probabilities summing to one.
#[derive(Debug, Clone)]
pub struct Environment {
    vocab: Arc<Vocabulary>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    kind: EnvironmentKind,
}

impl Environment {
    /// Validated constructor from labels and probabilities.
    pub fn new(vocab: Vocabulary, probs: Vec<f64>, kind: EnvironmentKind) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::EmptyEnvironment);
        }
        if vocab.len() != probs.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels but {} probabilities",
                vocab.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvalidInput(format!("probability {p} outside (0, 1]")));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}")));
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        // Rounding may leave the last partial sum a hair below one.
        *cumulative.last_mut().expect("non-empty") = 1.0;
        Ok(Environment {
            vocab: Arc::new(vocab),
            probs,
            cumulative,
            kind,
        })
    }

    fn from_weights(labels: Vocabulary, weights: Vec<f64>, kind: EnvironmentKind) -> Result<Self> {
        let total = compensated_sum(weights.iter().copied());
        let probs = weights.into_iter().map(|w| w / total).collect();
        Environment::new(labels, probs, kind)
    }

    fn numbered(k: usize) -> Vocabulary {
        Vocabulary::new((1..=k).map(|i| format!("sp{i}"))).expect("numbered labels are distinct")
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("uniform environment needs K >= 1"));
        }
        Environment::new(
            Self::numbered(k),
            vec![1.0 / k as f64; k],
            EnvironmentKind::Uniform,
        )
    }

    /// Geometric masses `q (1-q)^(i-1)`, truncated at the first `K` with
    /// residual tail `(1-q)^K < tail_eps` and renormalized.
    pub fn geometric(q: f64, tail_eps: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::param(format!("geometric q = {q} outside (0, 1)")));
        }
        if !(tail_eps > 0.0 && tail_eps < 1.0) {
            return Err(Error::param(format!("tail_eps = {tail_eps} outside (0, 1)")));
        }
        let mut weights = Vec::new();
        let mut residual = 1.0f64;
        while residual >= tail_eps {
            if weights.len() >= MAX_SPECIES {
                return Err(Error::param(format!(
                    "geometric q = {q} needs more than {MAX_SPECIES} species"
                )));
            }
            weights.push(q * residual);
            residual *= 1.0 - q;
        }
        let k = weights.len();
        Environment::from_weights(Self::numbered(k), weights, EnvironmentKind::Geometric)
    }

    /// Zipf-like masses proportional to `i^-gamma`, `i = 1..=k`.
    pub fn power_law(gamma: f64, k: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param(format!("power-law exponent {gamma} must be > 0")));
        }
        if k == 0 {
            return Err(Error::param("power-law environment needs K >= 1"));
        }
        let weights = (1..=k).map(|i| (i as f64).powf(-gamma)).collect();
        Environment::from_weights(Self::numbered(k), weights, EnvironmentKind::PowerLaw)
    }

    /// Empirical environment from abundance counts; zero counts are dropped.
    pub fn from_counts<I, S>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut labels = Vec::new();
        let mut weights = Vec::new();
        let mut all = Vec::new();
        for (label, count) in counts {
            let label = label.into();
            all.push(label.clone());
            if count > 0 {
                labels.push(label);
                weights.push(count as f64);
            }
        }
        // Duplicates are rejected even among zero-count rows.
        Vocabulary::new(all)?;
        if labels.is_empty() {
            return Err(Error::EmptyEnvironment);
        }
        Environment::from_weights(Vocabulary::new(labels)?, weights, EnvironmentKind::Empirical)
    }

    /// Parse a parametric descriptor: `uniform:K`, `geom:q[:eps]` or
    /// `zipf:gamma:K`.
    pub fn from_descriptor(spec: &str) -> Result<Self> {
        fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
            s.parse().map_err(|_| Error::param(format!("cannot parse {what} `{s}`")))
        }
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            ["uniform", k] => Environment::uniform(num(k, "species count")?),
            ["geom", q] => Environment::geometric(num(q, "geometric q")?, DEFAULT_TAIL_EPS),
            ["geom", q, eps] => Environment::geometric(num(q, "geometric q")?, num(eps, "tail eps")?),
            ["zipf", gamma, k] => Environment::power_law(num(gamma, "exponent")?, num(k, "species count")?),
            _ => Err(Error::param(format!("bad environment `{spec}`"))),
        }
    }

    pub fn kind(&self) -> EnvironmentKind {
        self.kind
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn labels(&self) -> &[String] {
        self.vocab.labels()
    }

    pub fn species_count(&self) -> usize {
        self.probs.len()
    }

    pub fn prob_of(&self, label: &str) -> Option<f64> {
        self.vocab.id(label).map(|id| self.probs[id as usize])
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -compensated_sum(self.probs.iter().map(|&p| p * p.ln()))
    }

    /// The `k` largest masses with their labels, in decreasing order.
    pub fn top_masses(&self, k: usize) -> Vec<(&str, f64)> {
        let mut order: Vec<usize> = (0..self.probs.len()).collect();
        order.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        order
            .into_iter()
            .take(k)
            .map(|i| (self.vocab.label(i as u32), self.probs[i]))
            .collect()
    }

    /// `n` i.i.d. draws by inverse CDF, deterministic in `(self, n, seed)`.
    pub fn draw_sample(&self, n: usize, seed: u64) -> Sample {
        let mut rng = rng::stream(seed, rng::DRAW_STREAM);
        let last = self.cumulative.len() - 1;
        let draws = (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                self.cumulative.partition_point(|&c| c <= u).min(last) as u32
            })
            .collect();
        Sample {
            vocab: Arc::clone(&self.vocab),
            draws,
        }
    }

    /// Total mass of species whose label is not in `seen`. Unknown labels
    /// are ignored.
    pub fn uncovered_mass<'a, I>(&self, seen: I) -> f64
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut mask = vec![false; self.probs.len()];
        for label in seen {
            if let Some(id) = self.vocab.id(label) {
                mask[id as usize] = true;
            }
        }
        self.mass_outside(&mask)
    }

    /// Uncovered mass of the species seen in the first `len` draws of `sample`.
    pub fn uncovered_mass_of_prefix(&self, sample: &Sample, len: usize) -> f64 {
        let len = len.min(sample.len());
        if Arc::ptr_eq(&self.vocab, &sample.vocab) {
            let mut mask = vec![false; self.probs.len()];
            for &id in &sample.draws[..len] {
                mask[id as usize] = true;
            }
            self.mass_outside(&mask)
        } else {
            self.uncovered_mass(sample.draws[..len].iter().map(|&id| sample.vocab.label(id)))
        }
    }

    fn mass_outside(&self, seen: &[bool]) -> f64 {
        let mass = compensated_sum(
            self.probs
                .iter()
                .zip(seen)
                .filter(|(_, &s)| !s)
                .map(|(&p, _)| p),
        );
        mass.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(env: &Environment) -> f64 {
        compensated_sum(env.probs().iter().copied())
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(Environment::uniform(4).unwrap().probs(), &[0.25; 4]);
        assert_eq!(Environment::uniform(1).unwrap().probs(), &[1.0]);
        assert!((sum(&Environment::uniform(10).unwrap()) - 1.0).abs() < 1e-12);
        assert!(matches!(
            Environment::uniform(0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn geometric_truncation() {
        let env = Environment::geometric(0.5, 0.1).unwrap();
        assert_eq!(env.species_count(), 4);
        let t = 0.5 + 0.25 + 0.125 + 0.0625;
        for (p, w) in env.probs().iter().zip([0.5, 0.25, 0.125, 0.0625]) {
            assert!((p - w / t).abs() < 1e-15);
        }
        let env = Environment::geometric(0.9, 0.5).unwrap();
        assert_eq!(env.probs(), &[1.0]);
        let env = Environment::geometric(0.1, DEFAULT_TAIL_EPS).unwrap();
        // smallest K with 0.9^K < 1e-12
        assert_eq!(env.species_count(), 263);
        assert!(env.probs().windows(2).all(|w| w[0] > w[1]));
        for q in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(Environment::geometric(q, 0.1).is_err());
        }
    }

    #[test]
    fn power_law_examples() {
        let env = Environment::power_law(1.0, 2).unwrap();
        assert!((env.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((env.probs()[1] - 1.0 / 3.0).abs() < 1e-15);
        let env = Environment::power_law(0.0001, 3).unwrap();
        assert!(env.probs().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-3));
        assert_eq!(Environment::power_law(2.0, 1).unwrap().probs(), &[1.0]);
        assert!(Environment::power_law(1.0, 0).is_err());
        assert!(Environment::power_law(0.0, 5).is_err());
    }

    #[test]
    fn counts_examples() {
        let env = Environment::from_counts([("a", 3), ("b", 1)]).unwrap();
        assert_eq!(env.probs(), &[0.75, 0.25]);
        assert_eq!(env.kind(), EnvironmentKind::Empirical);
        let env = Environment::from_counts([("a", 5), ("b", 0)]).unwrap();
        assert_eq!(env.labels(), &["a".to_string()]);
        assert_eq!(env.probs(), &[1.0]);
        let env = Environment::from_counts([("a", 1), ("b", 1), ("c", 2)]).unwrap();
        assert!((sum(&env) - 1.0).abs() < 1e-12);
        assert_eq!(
            Environment::from_counts([("a", 0), ("b", 0)]).unwrap_err(),
            Error::EmptyEnvironment
        );
        assert!(Environment::from_counts([("a", 1), ("a", 2)]).is_err());
    }

    #[test]
    fn validated_constructor_rejects_bad_vectors() {
        let v = || Vocabulary::new(["x", "y"]).unwrap();
        assert!(Environment::new(v(), vec![0.5, 0.4], EnvironmentKind::Empirical).is_err());
        assert!(Environment::new(v(), vec![1.0, 0.0], EnvironmentKind::Empirical).is_err());
        assert!(Environment::new(v(), vec![1.0], EnvironmentKind::Empirical).is_err());
        assert!(Vocabulary::new(["x", "x"]).is_err());
    }

    #[test]
    fn sampling_examples() {
        let env = Environment::from_counts([("only", 7)]).unwrap();
        let s = env.draw_sample(5, 3);
        assert_eq!(s.tokens().collect::<Vec<_>>(), vec!["only"; 5]);
        assert!(env.draw_sample(0, 3).is_empty());

        let env = Environment::uniform(2).unwrap();
        for seed in [0, 1, 99] {
            let s = env.draw_sample(10_000, seed);
            let first = s.tokens().filter(|&t| t == "sp1").count() as f64 / 10_000.0;
            assert!(first > 0.45 && first < 0.55, "freq {first}");
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let env = Environment::power_law(1.2, 50).unwrap();
        assert_eq!(env.draw_sample(500, 11), env.draw_sample(500, 11));
        assert_ne!(env.draw_sample(500, 11), env.draw_sample(500, 12));
    }

    #[test]
    fn uncovered_mass_examples() {
        let env = Environment::uniform(10).unwrap();
        let u = env.uncovered_mass(["sp1", "sp2", "sp3", "sp4"]);
        assert!((u - 0.6).abs() < 1e-15);
        let all: Vec<&str> = env.labels().iter().map(String::as_str).collect();
        assert_eq!(env.uncovered_mass(all), 0.0);
        assert_eq!(env.uncovered_mass([]), 1.0);
        assert!((env.uncovered_mass(["sp1", "nope"]) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn prefix_mass_matches_label_route() {
        let env = Environment::power_law(1.5, 200).unwrap();
        let s = env.draw_sample(300, 5);
        let foreign = Sample::from_tokens(s.tokens()).unwrap();
        for len in [0, 1, 50, 300, 1000] {
            let a = env.uncovered_mass_of_prefix(&s, len);
            let b = env.uncovered_mass_of_prefix(&foreign, len);
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_uncovered_mass_uniform_closed_form() {
        // E[U_n] = (1 - 1/K)^n for a uniform urn.
        let (k, n, reps) = (20usize, 30usize, 4000u64);
        let env = Environment::uniform(k).unwrap();
        let values: Vec<f64> = (0..reps)
            .map(|r| env.uncovered_mass_of_prefix(&env.draw_sample(n, r), n))
            .collect();
        let mean = values.iter().sum::<f64>() / reps as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        let expected = (1.0 - 1.0 / k as f64).powi(n as i32);
        assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} (se {se})");
    }

    #[test]
    fn sample_frequencies() {
        let s = Sample::from_tokens(["a", "b", "a", "c"]).unwrap();
        assert_eq!(s.frequency_of_frequency(1), 2);
        assert_eq!(s.frequency_of_frequency(2), 1);
        assert!(Sample::from_tokens(["a", ""]).is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn constructors_normalize(gamma in 0.01f64..4.0, k in 1usize..400, q in 0.01f64..0.99) {
                for env in [
                    Environment::power_law(gamma, k).unwrap(),
                    Environment::uniform(k).unwrap(),
                    Environment::geometric(q, 1e-9).unwrap(),
                ] {
                    let total = compensated_sum(env.probs().iter().copied());
                    prop_assert!((total - 1.0).abs() < 1e-12);
                    prop_assert!(env.probs().iter().all(|&p| p > 0.0));
                }
            }

            #[test]
            fn uncovered_mass_monotone(seen in proptest::collection::vec(0usize..60, 0..40), extra in proptest::collection::vec(0usize..60, 0..20)) {
                let env = Environment::power_law(1.1, 50).unwrap();
                let label = |i: usize| format!("sp{}", i + 1);
                let small: Vec<String> = seen.iter().map(|&i| label(i)).collect();
                let mut big = small.clone();
                big.extend(extra.iter().map(|&i| label(i)));
                let u_small = env.uncovered_mass(small.iter().map(String::as_str));
                let u_big = env.uncovered_mass(big.iter().map(String::as_str));
                prop_assert!(u_big <= u_small + 1e-15);
                prop_assert!((0.0..=1.0).contains(&u_big));
            }
        }
    }
}
