//! Estimation of historical hourly traffic volumes from vehicle probe data.
//!
//! Fixed traffic sensors cover only a handful of locations, so agencies that
//! need hourly volumes elsewhere fall back on profile methods that spread
//! annual average daily traffic (AADT) over a typical week. This crate trains
//! a from-scratch feedforward network on probe-vehicle, weather,
//! infrastructure, and temporal features to produce better hourly estimates,
//! and ships the machinery needed to evaluate that claim honestly:
//!
//! * [`nn`] — a fully-connected network with ELU activation, inverted
//!   dropout, optional batch normalization, and an Adam training loop.
//! * [`features`] — the 84-feature encoding of a carriageway-hour and the
//!   CSV dataset contract.
//! * [`metrics`] — the four accuracy measures (R², MAPE, ETCR, EMFR), the
//!   highway-capacity lookup behind ETCR, and a Wilcoxon signed-rank test.
//! * [`baselines`] — the state-of-practice profiling method, linear
//!   regression, k-nearest neighbors, and ensemble averaging.
//! * [`synth`] — a seeded generator of synthetic road networks with known
//!   ground truth, used as the evaluation oracle.
//! * [`eval`] — leave-one-station-out cross-validation, summary tables,
//!   quintile analyses, and the overfitting/dropout studies.
//! * [`model`] — serialization of a trained model (network + standardizer).
//!
//! The accompanying book (`book/` in the repository root) walks through each
//! of these pieces; its code snippets are compiled and run as doc-tests from
//! this crate so the book cannot drift out of sync with the library.

pub mod baselines;
pub mod eval;
pub mod features;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod synth;

// Book chapters double as doc-tests: every fenced Rust block in the guide is
// compiled and executed by `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data-model.md")]
    mod data_model {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/synthetic-worlds.md")]
    mod synthetic_worlds {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
}
