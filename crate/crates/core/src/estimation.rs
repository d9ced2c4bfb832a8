//! Monte Carlo estimation of error probabilities, by direct simulation and by
//! importance sampling under the opposite hypothesis, plus empirical
//! threshold calibration.
//!
//! Reproducibility contract: trial i draws from a substream derived from
//! (seed, stream domain, i), and per-trial contributions are combined along a
//! fixed binary tree over trial-index ranges (midpoint splits, sequential
//! leaves). Workers may evaluate subtrees in parallel, but the tree shape,
//! and hence every intermediate rounding, depends only on the trial range, so
//! estimates are bitwise identical for any thread count, and a run over
//! [0, T) equals the merge of runs over [0, T/2) and [T/2, T).

use crate::detectors::{Decision, Detector, Statistic};
use crate::error::{Error, Result};
use crate::models::{Hypothesis, MixtureModel};
use crate::rng::{trial_rng, StreamDomain};
use crate::special::std_normal_upper_quantile;

/// Which error probability is being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    FalseAlarm,
    MissDetection,
}

impl ErrorKind {
    /// Hypothesis the samples are drawn under for a *direct* estimate of
    /// this error.
    pub fn direct_hypothesis(&self) -> Hypothesis {
        match self {
            ErrorKind::FalseAlarm => Hypothesis::Null,
            ErrorKind::MissDetection => Hypothesis::Alternative,
        }
    }

    /// Hypothesis importance sampling draws under (the alternate of the true
    /// one), reweighting by the exact likelihood ratio.
    pub fn importance_hypothesis(&self) -> Hypothesis {
        match self {
            ErrorKind::FalseAlarm => Hypothesis::Alternative,
            ErrorKind::MissDetection => Hypothesis::Null,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorKind::FalseAlarm => "fa",
            ErrorKind::MissDetection => "md",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMethod {
    DirectMc,
    ImportanceSampled,
}

impl EstimatorMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorMethod::DirectMc => "direct",
            EstimatorMethod::ImportanceSampled => "is",
        }
    }
}

/// An estimated error probability with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub method: EstimatorMethod,
    pub trials: u64,
    pub seed: u64,
}

impl ErrorEstimate {
    /// Relative standard error; infinite when the estimate is zero.
    pub fn rel_std_err(&self) -> f64 {
        if self.p_hat > 0.0 {
            self.std_err / self.p_hat
        } else {
            f64::INFINITY
        }
    }
}

/// Running sums of trial weights and squared weights.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Tally {
    sum_w: f64,
    sum_w2: f64,
}

impl Tally {
    fn merge(self, right: Tally) -> Tally {
        Tally {
            sum_w: self.sum_w + right.sum_w,
            sum_w2: self.sum_w2 + right.sum_w2,
        }
    }
}

/// Largest range evaluated sequentially; ranges above this split at their
/// midpoint. Part of the reproducibility contract: changing it changes the
/// rounding tree.
const LEAF_TRIALS: u64 = 16;

/// Minimum amount of work (trials times sample size) worth forking for.
const PAR_MIN_WORK: u64 = 1 << 15;

/// Evaluate per-trial weights over [lo, hi) and sum them along the fixed
/// midpoint tree. `leaf` must be pure: weight of trial i depends only on i.
fn tally_tree<F>(lo: u64, hi: u64, work_per_trial: u64, leaf: &F) -> Tally
where
    F: Fn(u64, u64) -> Tally + Sync,
{
    let len = hi - lo;
    if len <= LEAF_TRIALS {
        return leaf(lo, hi);
    }
    let mid = lo + len / 2;
    if len.saturating_mul(work_per_trial) >= PAR_MIN_WORK {
        let (a, b) = rayon::join(
            || tally_tree(lo, mid, work_per_trial, leaf),
            || tally_tree(mid, hi, work_per_trial, leaf),
        );
        a.merge(b)
    } else {
        let a = tally_tree(lo, mid, work_per_trial, leaf);
        let b = tally_tree(mid, hi, work_per_trial, leaf);
        a.merge(b)
    }
}

fn validate_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    Ok(())
}

fn direct_tally<M: MixtureModel>(
    detector: &Detector,
    model: &M,
    hyp: Hypothesis,
    seed: u64,
    lo: u64,
    hi: u64,
) -> Tally {
    let n = model.sample_size();
    let domain = StreamDomain::evaluation(hyp, n as u64);
    tally_tree(lo, hi, n as u64, &|a, b| {
        let mut buf = vec![0.0f64; n];
        let mut t = Tally::default();
        for trial in a..b {
            let mut rng = trial_rng(seed, domain, trial);
            model.draw_into(hyp, &mut rng, &mut buf);
            let result = detector
                .evaluate(model, &buf)
                .expect("model-generated samples are valid detector input");
            let is_error = match hyp {
                Hypothesis::Null => result.decision == Decision::RejectNull,
                Hypothesis::Alternative => result.decision == Decision::AcceptNull,
            };
            if is_error {
                t.sum_w += 1.0;
                t.sum_w2 += 1.0;
            }
        }
        t
    })
}

/// Direct Monte Carlo estimate of a detector's error frequency: the
/// reject rate under the null (false alarm) or the accept rate under the
/// alternative (miss detection). Standard error is binomial.
pub fn estimate_direct<M: MixtureModel>(
    detector: &Detector,
    model: &M,
    hyp: Hypothesis,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    validate_trials(trials)?;
    let tally = direct_tally(detector, model, hyp, seed, 0, trials);
    let p_hat = tally.sum_w / trials as f64;
    let std_err = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
    Ok(ErrorEstimate {
        p_hat,
        std_err,
        method: EstimatorMethod::DirectMc,
        trials,
        seed,
    })
}

fn importance_tally<M: MixtureModel>(
    model: &M,
    threshold: f64,
    target: ErrorKind,
    seed: u64,
    lo: u64,
    hi: u64,
) -> Tally {
    let n = model.sample_size();
    let hyp = target.importance_hypothesis();
    let domain = StreamDomain::evaluation(hyp, n as u64);
    tally_tree(lo, hi, n as u64, &|a, b| {
        let mut buf = vec![0.0f64; n];
        let mut t = Tally::default();
        for trial in a..b {
            let mut rng = trial_rng(seed, domain, trial);
            model.draw_into(hyp, &mut rng, &mut buf);
            let llr = model
                .llr(&buf)
                .expect("model-generated samples have a log-likelihood ratio");
            // One exponentiation per trial, of the signed log weight.
            let w = match target {
                ErrorKind::FalseAlarm if llr >= threshold => (-llr).exp(),
                ErrorKind::MissDetection if llr < threshold => llr.exp(),
                _ => 0.0,
            };
            t.sum_w += w;
            t.sum_w2 += w * w;
        }
        t
    })
}

/// Importance-sampled estimate of an LRT-family error probability. Samples
/// are drawn under the hypothesis alternate to the true one and each error
/// indicator is reweighted by the exact likelihood ratio:
///
/// - false alarm: draw under H1, weight `exp(-LLR)` on `LLR >= threshold`;
/// - miss detection: draw under H0, weight `exp(+LLR)` on `LLR < threshold`.
///
/// The estimator is the plain (unnormalized) change of measure; the
/// likelihood ratio is known exactly, so no self-normalization is applied.
/// Standard error is the sample standard deviation of the weighted
/// indicators over sqrt(trials).
pub fn estimate_importance<M: MixtureModel>(
    model: &M,
    threshold: f64,
    target: ErrorKind,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    validate_trials(trials)?;
    let tally = importance_tally(model, threshold, target, seed, 0, trials);
    let tf = trials as f64;
    let p_hat = tally.sum_w / tf;
    let var = if trials > 1 {
        ((tally.sum_w2 - tf * p_hat * p_hat) / (tf - 1.0)).max(0.0)
    } else {
        0.0
    };
    let std_err = (var / tf).sqrt();
    Ok(ErrorEstimate {
        p_hat,
        std_err,
        method: EstimatorMethod::ImportanceSampled,
        trials,
        seed,
    })
}

/// Estimate one error kind of a detector, choosing direct Monte Carlo or
/// importance sampling. Importance sampling requires the LLR statistic.
pub fn estimate_error<M: MixtureModel>(
    detector: &Detector,
    model: &M,
    kind: ErrorKind,
    method: EstimatorMethod,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    match method {
        EstimatorMethod::DirectMc => {
            estimate_direct(detector, model, kind.direct_hypothesis(), trials, seed)
        }
        EstimatorMethod::ImportanceSampled => {
            if detector.statistic != Statistic::Llr {
                return Err(Error::InvalidParameter(
                    "importance sampling needs a detector that exposes its log-likelihood ratio"
                        .into(),
                ));
            }
            estimate_importance(model, detector.threshold, kind, trials, seed)
        }
    }
}

/// How a threshold was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMethod {
    /// Empirical (1 - level)-quantile of null-simulated statistics.
    EmpiricalQuantile { null_sims: u64 },
    /// Closed-form inversion of the max test's false-alarm probability.
    AnalyticMaxTest,
}

/// A threshold calibrated to a target false-alarm level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedThreshold {
    pub level: f64,
    pub threshold: f64,
    pub method: ThresholdMethod,
    /// Set when the calibration sample cannot realize the requested level
    /// (e.g. a constant statistic): the empirical rejection rate at the
    /// chosen threshold materially exceeds the level.
    pub degenerate: bool,
}

/// Analytic max-test threshold: `tau` with `1 - Phi(tau)^n = level`,
/// i.e. the upper quantile of the per-sample tail mass
/// `1 - (1-level)^(1/n)`, evaluated in expm1/log1p form.
pub fn analytic_max_threshold(n: u64, level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "false-alarm level must lie in (0, 1), got {level}"
        )));
    }
    let eta = -((-level).ln_1p() / n as f64).exp_m1();
    std_normal_upper_quantile(eta)
}

/// Calibrate a statistic's threshold to a false-alarm level.
///
/// The max test inverts its closed-form false-alarm probability; every other
/// statistic is simulated `null_sims` times under the null on a dedicated
/// calibration stream family (disjoint from evaluation streams by
/// construction) and the threshold is the order statistic at the 1-based
/// index `ceil((1 - level) null_sims)`, the conservative side of the target.
pub fn calibrate_threshold<M: MixtureModel>(
    statistic: &Statistic,
    model: &M,
    level: f64,
    null_sims: u64,
    seed: u64,
) -> Result<CalibratedThreshold> {
    let mut all = calibrate_thresholds(statistic, model, &[level], null_sims, seed)?;
    Ok(all.pop().expect("one level in, one threshold out"))
}

/// Calibrate thresholds for several levels from one shared null simulation.
pub fn calibrate_thresholds<M: MixtureModel>(
    statistic: &Statistic,
    model: &M,
    levels: &[f64],
    null_sims: u64,
    seed: u64,
) -> Result<Vec<CalibratedThreshold>> {
    for &level in levels {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "false-alarm level must lie in (0, 1), got {level}"
            )));
        }
    }
    if let Statistic::SampleMax = statistic {
        return levels
            .iter()
            .map(|&level| {
                Ok(CalibratedThreshold {
                    level,
                    threshold: analytic_max_threshold(model.sample_size() as u64, level)?,
                    method: ThresholdMethod::AnalyticMaxTest,
                    degenerate: false,
                })
            })
            .collect();
    }
    for &level in levels {
        let need = (10.0 / level).ceil() as u64;
        if null_sims < need {
            return Err(Error::InsufficientCalibration {
                need,
                got: null_sims,
                level,
            });
        }
    }
    let mut sorted = simulate_null_statistics(statistic, model, null_sims, seed)?;
    sorted.sort_by(f64::total_cmp);
    let out = levels
        .iter()
        .map(|&level| {
            // ceil((1-level) * sims) with a tolerance for the float
            // representation of the level (e.g. 0.95 * 1e5 must land on
            // 95000, not 95001).
            let raw = (1.0 - level) * null_sims as f64;
            let index = (raw - 1e-9).ceil().max(1.0) as usize;
            let index = index.min(sorted.len());
            let threshold = sorted[index - 1];
            let exceed = sorted.iter().filter(|&&s| s >= threshold).count() as f64;
            let achieved = exceed / null_sims as f64;
            let degenerate = achieved > level + 2.0 / null_sims as f64;
            CalibratedThreshold {
                level,
                threshold,
                method: ThresholdMethod::EmpiricalQuantile { null_sims },
                degenerate,
            }
        })
        .collect();
    Ok(out)
}

/// Simulate a statistic under the null on the calibration stream family.
/// Results are indexed by trial, so the output is independent of worker
/// scheduling.
pub fn simulate_null_statistics<M: MixtureModel>(
    statistic: &Statistic,
    model: &M,
    sims: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    validate_trials(sims)?;
    let n = model.sample_size();
    let salt = match statistic {
        Statistic::Llr => 1,
        Statistic::SampleMax => 2,
        Statistic::HigherCriticism(_) => 3,
        Statistic::AcwSign => 4,
    };
    let domain = StreamDomain::calibration(n as u64, salt);
    let mut values = vec![0.0f64; sims as usize];
    let chunk = LEAF_TRIALS as usize;
    use rayon::prelude::*;
    values
        .par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(block, out)| {
            let mut buf = vec![0.0f64; n];
            for (k, slot) in out.iter_mut().enumerate() {
                let trial = (block * chunk + k) as u64;
                let mut rng = trial_rng(seed, domain, trial);
                model.draw_into(Hypothesis::Null, &mut rng, &mut buf);
                *slot = statistic
                    .evaluate(model, &buf)
                    .expect("model-generated samples are valid statistic input");
            }
        });
    Ok(values)
}
