//! Detection of sparse mixtures in the Gaussian location model.
//!
//! The testing problem is a sequence of binary hypotheses on n i.i.d. samples:
//!
//! ```text
//! H0: X_i ~ N(0, 1)
//! H1: X_i ~ (1 - eps_n) N(0, 1) + eps_n N(mu_n, 1)
//! ```
//!
//! with mixture weight `eps_n = n^-beta` vanishing as the sample size grows.
//! The crate provides:
//!
//! - the model itself ([`models`]): likelihood ratios, chi-squared divergence,
//!   reproducible mixture sampling;
//! - four test statistics ([`detectors`]): the oracle log-likelihood-ratio
//!   test, the sample-maximum test (with closed-form error probabilities),
//!   higher criticism, and the ACW sign test;
//! - the phase diagram of (beta, r) parameter regimes and the theoretical
//!   rate functions g(n) that govern how fast log error probabilities decay
//!   in each regime ([`regimes`]);
//! - direct and importance-sampled Monte Carlo estimators of the false-alarm
//!   and miss-detection probabilities, plus empirical threshold calibration
//!   ([`estimation`]);
//! - least-squares fitting of log error probabilities against g(n) and
//!   comparison of the fitted slope with the theoretical constants
//!   ([`ratefit`]).
//!
//! All Monte Carlo machinery is deterministic: every trial draws from a
//! substream derived from (master seed, purpose, trial index), so results are
//! bitwise identical for any worker count.

pub mod detectors;
pub mod discrete;
pub mod error;
pub mod estimation;
pub mod models;
pub mod ratefit;
pub mod regimes;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use models::{GaussianModel, Hypothesis, MixtureModel, ModelParams, SignalSpec};
