//! Prediction of the unsampled probability mass of an urn from a single
//! sample drawn with replacement.
//!
//! The sample is embedded into a unit-rate Poisson process, the set of
//! species seen by a cut time `t` is frozen, and the waiting time `S_m`
//! until `m` further arrivals of unseen species gives an exact pivot
//! `U(t) * S_m ~ Gamma(m, 1)` for the uncovered mass `U(t)`.
//!
//! ```
//! use unseen::{embedding_algorithm, Environment, Status};
//!
//! let env = Environment::uniform(100).unwrap();
//! let sample = env.draw_sample(2000, 1);
//! let p = embedding_algorithm(&sample, 200.0, 5, 0.95, 1).unwrap();
//! assert_eq!(p.status, Status::Ok);
//! assert!(p.lower.unwrap() <= p.point.unwrap());
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embedding;
pub mod environment;
pub mod error;
pub mod estimators;
pub mod io;
pub mod montecarlo;
pub mod rng;

#[cfg(feature = "cli")]
pub mod cli;

pub use embedding::{
    cut_exceedance_probability, embedding_algorithm, poissonize, EmbeddedSample, GapResult, Prediction, Status,
};
pub use environment::{Environment, EnvironmentKind, Sample, Vocabulary};
pub use error::{Error, Result};
pub use estimators::{
    esty_interval, gamma_pivot_interval, gamma_pivot_point, gamma_quantile, good_turing, regularized_gamma_p,
    Interval,
};
pub use montecarlo::{ExperimentReport, Schedule};
