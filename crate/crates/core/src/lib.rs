//! A stochastic-choice laboratory for common ratio effect testing.
//!
//! The crate models binary-lottery choice under several families of random
//! utility, implements the paired choice tests (weak, strong, and the
//! wide-band geometry) together with valuation sign/mean tests, and ships
//! the constructions showing how far valuation tests can be steered by
//! admissible noise. Reproduction harnesses regenerate the reference
//! figures and sweeps, and `experiments::run_prop_suite` packages every
//! claim as a seeded verification suite.
//!
//! Determinism is the backbone: all randomness flows through the
//! counter-based [`rng::RngStream`], so every experiment is a pure function
//! of its seed regardless of thread count.

// `!(x > 0.0)` style guards are deliberate: unlike `x <= 0.0` they also
// reject NaN. `i % 2` parity stays as written in the quadrature weights.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::manual_is_multiple_of)]

pub mod dataio;
pub mod error;
pub mod experiments;
pub mod lottery;
pub mod models;
pub mod rng;
pub mod stats;
pub mod testkit;
pub mod utility;
pub mod valuation;

pub use error::{Error, Result};
pub use lottery::{make_problem, CommonRatioProblem, Lottery};
pub use rng::RngStream;
pub use testkit::{mnoss_region_test, strong_test, weak_test, FrequencyPair, Verdict};
pub use utility::{expected_utility, weight_eval, UtilitySpec, WeightingSpec};
