//! Experiment configuration: a flat `key = value` text document.
//!
//! Unknown keys are errors: a misspelled knob must not silently fall back
//! to a default. Blank lines and `#` comments are allowed.
//!
//! ```text
//! beta = 0.6
//! signal_kind = sparse_r        # sparse_r | dense_power | explicit
//! r = 0.19
//! n_grid = 10, 100, 1000, 10000
//! tests = lrt, max, hc, acw
//! fa_levels = oracle            # or a list like: 0.05, 0.10
//! trials_direct = 10000
//! trials_is = 10000
//! is_threshold_n = 100000
//! seed = 42
//! output = out
//! ```
//!
//! `signal_kind = explicit` instead takes `explicit_mu = n:mu, n:mu, ...`
//! covering every entry of `n_grid`.

use mixdetect::{ModelParams, SignalSpec};
use std::collections::BTreeMap;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("key `{key}`: {message}")]
    BadValue { key: &'static str, message: String },
    #[error(transparent)]
    Model(#[from] mixdetect::Error),
}

/// Tests the adaptive comparison can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Lrt,
    Max,
    Hc,
    Acw,
}

impl TestKind {
    pub fn name(&self) -> &'static str {
        match self {
            TestKind::Lrt => "lrt",
            TestKind::Max => "max",
            TestKind::Hc => "hc",
            TestKind::Acw => "acw",
        }
    }
}

/// False-alarm operating points: the oracle threshold-zero LRT, or a list of
/// calibrated levels.
#[derive(Debug, Clone, PartialEq)]
pub enum FaLevels {
    Oracle,
    Levels(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub beta: f64,
    pub signal: SignalSpec,
    pub n_grid: Vec<u64>,
    pub tests: Vec<TestKind>,
    pub fa_levels: FaLevels,
    pub trials_direct: u64,
    pub trials_is: u64,
    /// Direct Monte Carlo for n up to this value, importance sampling above.
    pub is_threshold_n: u64,
    pub seed: u64,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<ModelParams, mixdetect::Error> {
        ModelParams::new(self.beta, self.signal.clone())
    }

    pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line: lineno + 1,
                text: raw.to_string(),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            const KNOWN: &[&str] = &[
                "beta",
                "signal_kind",
                "r",
                "explicit_mu",
                "n_grid",
                "tests",
                "fa_levels",
                "trials_direct",
                "trials_is",
                "is_threshold_n",
                "seed",
                "output",
            ];
            if !KNOWN.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key));
            }
            if map.insert(key.clone(), value).is_some() {
                return Err(ConfigError::DuplicateKey(key));
            }
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, String>) -> Result<ExperimentConfig, ConfigError> {
        let get = |key: &'static str| map.get(key).map(|s| s.as_str());
        let require = |key: &'static str| get(key).ok_or(ConfigError::MissingKey(key));

        let beta: f64 = parse_num(require("beta")?, "beta")?;

        let signal = match require("signal_kind")? {
            "sparse_r" => SignalSpec::SparseR {
                r: parse_num(require("r")?, "r")?,
            },
            "dense_power" => SignalSpec::DensePower {
                r: parse_num(require("r")?, "r")?,
            },
            "explicit" => {
                let table = parse_explicit(require("explicit_mu")?)?;
                SignalSpec::Explicit(table)
            }
            other => {
                return Err(ConfigError::BadValue {
                    key: "signal_kind",
                    message: format!("expected sparse_r, dense_power or explicit, got `{other}`"),
                })
            }
        };
        if get("explicit_mu").is_some() && !matches!(signal, SignalSpec::Explicit(_)) {
            return Err(ConfigError::BadValue {
                key: "explicit_mu",
                message: "only valid with signal_kind = explicit".into(),
            });
        }
        if get("r").is_some() && matches!(signal, SignalSpec::Explicit(_)) {
            return Err(ConfigError::BadValue {
                key: "r",
                message: "not valid with signal_kind = explicit".into(),
            });
        }

        let n_grid: Vec<u64> = parse_list(require("n_grid")?, "n_grid")?;
        if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::BadValue {
                key: "n_grid",
                message: "must be a nonempty, strictly increasing list".into(),
            });
        }

        let tests = match get("tests") {
            None => vec![TestKind::Lrt],
            Some(s) => {
                let mut out = Vec::new();
                for item in split_list(s) {
                    let kind = match item {
                        "lrt" => TestKind::Lrt,
                        "max" => TestKind::Max,
                        "hc" => TestKind::Hc,
                        "acw" => TestKind::Acw,
                        other => {
                            return Err(ConfigError::BadValue {
                                key: "tests",
                                message: format!(
                                    "expected a subset of lrt, max, hc, acw; got `{other}`"
                                ),
                            })
                        }
                    };
                    if out.contains(&kind) {
                        return Err(ConfigError::BadValue {
                            key: "tests",
                            message: format!("duplicate test `{item}`"),
                        });
                    }
                    out.push(kind);
                }
                out
            }
        };
        if tests.is_empty() {
            return Err(ConfigError::BadValue {
                key: "tests",
                message: "test list is empty".into(),
            });
        }

        let fa_levels = match get("fa_levels") {
            None => FaLevels::Oracle,
            Some("oracle") => FaLevels::Oracle,
            Some(s) => {
                let levels: Vec<f64> = parse_list(s, "fa_levels")?;
                if levels.is_empty() || levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
                    return Err(ConfigError::BadValue {
                        key: "fa_levels",
                        message: "levels must be a nonempty list inside (0, 1)".into(),
                    });
                }
                FaLevels::Levels(levels)
            }
        };

        let trials_direct = match get("trials_direct") {
            None => 10_000,
            Some(s) => parse_num(s, "trials_direct")?,
        };
        let trials_is = match get("trials_is") {
            None => 10_000,
            Some(s) => parse_num(s, "trials_is")?,
        };
        for (key, v) in [("trials_direct", trials_direct), ("trials_is", trials_is)] {
            if v < 100 {
                return Err(ConfigError::BadValue {
                    key: if key == "trials_direct" {
                        "trials_direct"
                    } else {
                        "trials_is"
                    },
                    message: format!("need at least 100 trials, got {v}"),
                });
            }
        }
        let is_threshold_n = match get("is_threshold_n") {
            None => 100_000,
            Some(s) => parse_num(s, "is_threshold_n")?,
        };
        let seed: u64 = parse_num(require("seed")?, "seed")?;
        let output = PathBuf::from(get("output").unwrap_or("out"));

        let config = ExperimentConfig {
            beta,
            signal,
            n_grid,
            tests,
            fa_levels,
            trials_direct,
            trials_is,
            is_threshold_n,
            seed,
            output,
        };
        // Model-level validation (beta range, r positivity, table entries).
        config.params()?;
        Ok(config)
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn parse_num<T: std::str::FromStr>(s: &str, key: &'static str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| ConfigError::BadValue {
        key,
        message: format!("`{s}`: {e}"),
    })
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &'static str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    split_list(s).map(|item| parse_num(item, key)).collect()
}

fn parse_explicit(s: &str) -> Result<Vec<(u64, f64)>, ConfigError> {
    split_list(s)
        .map(|pair| {
            let (n, mu) = pair.split_once(':').ok_or(ConfigError::BadValue {
                key: "explicit_mu",
                message: format!("expected `n:mu`, got `{pair}`"),
            })?;
            Ok((
                parse_num(n.trim(), "explicit_mu")?,
                parse_num(mu.trim(), "explicit_mu")?,
            ))
        })
        .collect()
}
