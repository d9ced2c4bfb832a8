//! Library surface of the experiment driver, shared between the `mixdetect`
//! binary and the integration test suites.

pub mod config;
pub mod experiment;
pub mod selftest;

pub use config::{ConfigError, ExperimentConfig, FaLevels, TestKind};
