//! The four test statistics and their decision rules: oracle LRT, sample
//! maximum, higher criticism, and the ACW sign test.
//!
//! All decisions reject on `statistic >= threshold` (ties reject). The max
//! test additionally has closed-form error probabilities, since the cdf of a
//! sample maximum is just the per-sample cdf raised to the n-th power.

use crate::error::{Error, Result};
use crate::models::{GaussianModel, MixtureModel};
use crate::special::{std_normal_ln_cdf, std_normal_sf};

/// Outcome of applying a thresholded test to one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorResult {
    pub statistic: f64,
    pub decision: Decision,
    pub threshold_used: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    RejectNull,
    AcceptNull,
}

/// Decision rule shared by every test: reject if and only if the statistic
/// reaches the threshold.
pub fn decide(statistic: f64, threshold: f64) -> Decision {
    if statistic >= threshold {
        Decision::RejectNull
    } else {
        Decision::AcceptNull
    }
}

/// Index range the higher-criticism maximum runs over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HcConfig {
    /// All order statistics 1..=n (the textbook definition).
    Full,
    /// Only indices i with lo*n < i <= hi*n. Common variants restrict to the
    /// lower half of the order statistics; this is an extension knob, not
    /// part of the reference definition.
    Restricted { lo_fraction: f64, hi_fraction: f64 },
}

impl HcConfig {
    fn validate(&self) -> Result<()> {
        if let HcConfig::Restricted {
            lo_fraction,
            hi_fraction,
        } = *self
        {
            if !(0.0..1.0).contains(&lo_fraction)
                || !(lo_fraction < hi_fraction && hi_fraction <= 1.0)
            {
                return Err(Error::InvalidParameter(format!(
                    "HC index range requires 0 <= lo < hi <= 1, got ({lo_fraction}, {hi_fraction})"
                )));
            }
        }
        Ok(())
    }

    fn includes(&self, i: usize, n: usize) -> bool {
        match *self {
            HcConfig::Full => true,
            HcConfig::Restricted {
                lo_fraction,
                hi_fraction,
            } => {
                let i = i as f64;
                let n = n as f64;
                i > lo_fraction * n && i <= hi_fraction * n
            }
        }
    }
}

/// A statistic together with how to evaluate it on a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    /// The oracle log-likelihood ratio of the whole sample.
    Llr,
    /// The sample maximum.
    SampleMax,
    /// Higher criticism over the configured order-statistic range.
    HigherCriticism(HcConfig),
    /// ACW sign statistic: normalized sign sums of the largest samples by
    /// absolute value.
    AcwSign,
}

impl Statistic {
    pub fn evaluate<M: MixtureModel>(&self, model: &M, samples: &[f64]) -> Result<f64> {
        match self {
            Statistic::Llr => model.llr(samples),
            Statistic::SampleMax => max_statistic(samples),
            Statistic::HigherCriticism(cfg) => hc_statistic(samples, *cfg),
            Statistic::AcwSign => acw_statistic(samples),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Llr => "lrt",
            Statistic::SampleMax => "max",
            Statistic::HigherCriticism(_) => "hc",
            Statistic::AcwSign => "acw",
        }
    }
}

/// A statistic with a decision threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub statistic: Statistic,
    pub threshold: f64,
}

impl Detector {
    /// The oracle likelihood ratio test at threshold zero.
    pub fn oracle_lrt() -> Self {
        Detector {
            statistic: Statistic::Llr,
            threshold: 0.0,
        }
    }

    /// LRT at an arbitrary (calibrated) threshold.
    pub fn lrt(threshold: f64) -> Self {
        Detector {
            statistic: Statistic::Llr,
            threshold,
        }
    }

    /// Max test at the default threshold `sqrt(2 log n)`.
    pub fn max_test(n: u64) -> Self {
        Detector {
            statistic: Statistic::SampleMax,
            threshold: default_max_threshold(n),
        }
    }

    pub fn evaluate<M: MixtureModel>(&self, model: &M, samples: &[f64]) -> Result<DetectorResult> {
        let statistic = self.statistic.evaluate(model, samples)?;
        Ok(DetectorResult {
            statistic,
            decision: decide(statistic, self.threshold),
            threshold_used: self.threshold,
        })
    }
}

/// Default max-test threshold `tau_n = sqrt(2 log n)`.
pub fn default_max_threshold(n: u64) -> f64 {
    (2.0 * (n as f64).ln()).sqrt()
}

/// Oracle LRT statistic: the sample log-likelihood ratio.
pub fn lrt_statistic(model: &GaussianModel, samples: &[f64]) -> Result<f64> {
    model.llr(samples)
}

/// Largest sample value.
pub fn max_statistic(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut best = f64::NEG_INFINITY;
    for (i, &x) in samples.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteSample { index: i, value: x });
        }
        if x > best {
            best = x;
        }
    }
    Ok(best)
}

/// Closed-form error probabilities of the max test at threshold `tau`:
///
/// ```text
/// P_FA = 1 - Phi(tau)^n
/// P_MD = ((1 - eps) Phi(tau) + eps Phi(tau - mu))^n
/// ```
///
/// Both powers are taken in the log domain, so huge n and extreme thresholds
/// stay accurate.
pub fn max_test_error_probs(n: u64, eps: f64, mu: f64, tau: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "mixture weight must lie in [0, 1], got {eps}"
        )));
    }
    if !tau.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "threshold and shift must be finite, got tau={tau}, mu={mu}"
        )));
    }
    let nf = n as f64;
    let ln_phi = std_normal_ln_cdf(tau);
    let p_fa = -(nf * ln_phi).exp_m1();
    // Mixture cdf at tau, written as 1 - (mixture tail mass) so the log stays
    // accurate when the cdf is close to one.
    let tail = (1.0 - eps) * std_normal_sf(tau) + eps * std_normal_sf(tau - mu);
    let ln_mix = (-tail).ln_1p();
    let p_md = (nf * ln_mix).exp();
    Ok((p_fa, p_md))
}

/// Higher-criticism statistic from raw samples. P-values are `p_i = Q(X_i)`;
/// order statistics whose p-value rounds to exactly 0 or 1 would zero the
/// denominator and are skipped.
pub fn hc_statistic(samples: &[f64], config: HcConfig) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut pvalues = Vec::with_capacity(samples.len());
    for (i, &x) in samples.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteSample { index: i, value: x });
        }
        pvalues.push(std_normal_sf(x));
    }
    hc_statistic_from_pvalues(&mut pvalues, config)
}

/// Higher criticism evaluated directly on p-values (consumed and sorted in
/// place):
///
/// ```text
/// HC* = max_i sqrt(n) (i/n - p_(i)) / sqrt(p_(i) (1 - p_(i)))
/// ```
///
/// Returns negative infinity if every index is degenerate (all p-values are
/// 0 or 1 in floating point), so the decision rule can never reject on such
/// a sample by accident.
pub fn hc_statistic_from_pvalues(pvalues: &mut [f64], config: HcConfig) -> Result<f64> {
    if pvalues.is_empty() {
        return Err(Error::EmptySample);
    }
    config.validate()?;
    pvalues.sort_by(f64::total_cmp);
    let n = pvalues.len();
    let sqrt_n = (n as f64).sqrt();
    let mut best = f64::NEG_INFINITY;
    for (idx, &p) in pvalues.iter().enumerate() {
        let i = idx + 1;
        if !config.includes(i, n) {
            continue;
        }
        if p <= 0.0 || p >= 1.0 {
            continue; // degenerate order statistic
        }
        let term = sqrt_n * (i as f64 / n as f64 - p) / (p * (1.0 - p)).sqrt();
        if term > best {
            best = term;
        }
    }
    Ok(best)
}

/// ACW sign statistic: order the samples by descending absolute value
/// (ties broken by original index), then maximize the normalized sign sum
/// over prefixes:
///
/// ```text
/// S* = max_k (sum_{i<=k} sgn(X_[i])) / sqrt(k)
/// ```
///
/// Exact zeros contribute sign 0.
pub fn acw_statistic(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    for (i, &x) in samples.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteSample { index: i, value: x });
        }
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    // Stable sort keeps the original index order on |x| ties.
    order.sort_by(|&a, &b| samples[b].abs().partial_cmp(&samples[a].abs()).unwrap());
    let mut sign_sum: i64 = 0;
    let mut best = f64::NEG_INFINITY;
    for (k, &idx) in order.iter().enumerate() {
        let x = samples[idx];
        sign_sum += if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            0
        };
        let value = sign_sum as f64 / ((k + 1) as f64).sqrt();
        if value > best {
            best = value;
        }
    }
    Ok(best)
}
