//! Experiment orchestration: the rate experiment (error probabilities versus
//! g(n) with slope fits), the adaptive-test miss-detection comparison, and
//! the regime map sweep, plus the CSV/JSON writers for each.
//!
//! Everything downstream of the config is deterministic in (config, seed):
//! rows are gathered by cell index and serialized in grid order, so output
//! bytes do not depend on the worker count.

use crate::config::{ExperimentConfig, FaLevels, TestKind};
use mixdetect::detectors::{max_test_error_probs, Detector, HcConfig, Statistic};
use mixdetect::estimation::{
    calibrate_thresholds, estimate_direct, estimate_error, estimate_importance,
    CalibratedThreshold, ErrorEstimate, ErrorKind, EstimatorMethod, ThresholdMethod,
};
use mixdetect::ratefit::{
    compare_to_theory, default_n_min, fit_rate, RateFit, RatePoint, TheoryVerdict,
};
use mixdetect::regimes::{classify, critical_r, rate_g, RegimeClass, Scaling};
use mixdetect::{GaussianModel, Hypothesis, SignalSpec};
use thiserror::Error;

/// Default tolerance for slope-versus-constant verdicts at desk scale.
pub const DEFAULT_SLOPE_TOL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] mixdetect::Error),
    #[error(
        "parameters (beta={beta}, r={r}) lie below the detection boundary \
         (critical r = {crit}): the summed error probabilities of every test \
         tend to one, so a rate experiment is meaningless"
    )]
    Undetectable { beta: f64, r: f64, crit: f64 },
    #[error(
        "parameters (beta={beta}, r={r}) lie exactly on a regime boundary; \
         no rate characterization applies"
    )]
    OnBoundary { beta: f64, r: f64 },
    #[error(
        "rate experiments need a sparse_r or dense_power signal scaling; \
             classify an explicit mu table by hand instead"
    )]
    ExplicitSignal,
    #[error("no fit possible for {0}: every estimate at every n was zero")]
    AllZero(&'static str),
    #[error("adaptive comparison needs numeric fa_levels, not `oracle`")]
    OracleLevels,
}

/// One row of the rate experiment: both error estimates at one sample size.
#[derive(Debug, Clone)]
pub struct RateRow {
    pub n: u64,
    pub g: f64,
    pub fa: ErrorEstimate,
    pub md: ErrorEstimate,
}

/// A point excluded from the fit because its estimate was exactly zero.
#[derive(Debug, Clone)]
pub struct ExcludedPoint {
    pub n: u64,
    pub kind: ErrorKind,
    pub reason: String,
}

/// Direct-versus-importance agreement at the crossover sample size.
#[derive(Debug, Clone)]
pub struct OverlapCheck {
    pub n: u64,
    pub kind: ErrorKind,
    pub direct: ErrorEstimate,
    pub importance: ErrorEstimate,
    /// |difference| in combined standard errors.
    pub sigma: f64,
    pub pass: bool,
}

/// Fit and verdict for one error kind, or the reason there is none.
#[derive(Debug, Clone)]
pub enum FitOutcome {
    Fitted {
        kind: ErrorKind,
        fit: RateFit,
        verdict: TheoryVerdict,
    },
    Unfittable {
        kind: ErrorKind,
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct RateExperimentResult {
    pub regime: RegimeClass,
    pub rows: Vec<RateRow>,
    pub excluded: Vec<ExcludedPoint>,
    pub overlap: Vec<OverlapCheck>,
    pub fits: Vec<FitOutcome>,
    pub n_min_used: u64,
    pub slope_tol: f64,
}

impl RateExperimentResult {
    /// True when every computed verdict passed (the CLI's exit criterion).
    pub fn all_verdicts_pass(&self) -> bool {
        self.fits.iter().all(|f| match f {
            FitOutcome::Fitted { verdict, .. } => verdict.pass,
            FitOutcome::Unfittable { .. } => false,
        })
    }
}

/// Classify the configured parameter point, refusing undetectable or
/// boundary points.
pub fn classify_config(cfg: &ExperimentConfig) -> Result<RegimeClass, ExperimentError> {
    let (r, scaling) = match cfg.signal {
        SignalSpec::SparseR { r } => (r, Scaling::SparseR),
        SignalSpec::DensePower { r } => (r, Scaling::DensePower),
        SignalSpec::Explicit(_) => return Err(ExperimentError::ExplicitSignal),
    };
    let class = classify(cfg.beta, r, scaling)?;
    if !class.is_detectable() {
        if class.regime == mixdetect::regimes::Regime::Undetectable {
            let crit = match scaling {
                Scaling::SparseR => critical_r(cfg.beta).unwrap_or(f64::NAN),
                Scaling::DensePower => cfg.beta - 0.5,
            };
            return Err(ExperimentError::Undetectable {
                beta: cfg.beta,
                r,
                crit,
            });
        }
        return Err(ExperimentError::OnBoundary { beta: cfg.beta, r });
    }
    Ok(class)
}

fn estimate_both(
    model: &GaussianModel,
    method: EstimatorMethod,
    trials: u64,
    seed: u64,
) -> Result<(ErrorEstimate, ErrorEstimate), mixdetect::Error> {
    let oracle = Detector::oracle_lrt();
    let fa = estimate_error(&oracle, model, ErrorKind::FalseAlarm, method, trials, seed)?;
    let md = estimate_error(&oracle, model, ErrorKind::MissDetection, method, trials, seed)?;
    Ok((fa, md))
}

/// Run the oracle-LRT rate experiment over the configured n grid: estimate
/// both error probabilities at every n (direct Monte Carlo up to
/// `is_threshold_n`, importance sampling above), evaluate the regime's rate
/// function, fit the log-error slopes and compare them to the theory
/// constants. At the crossover n both estimators run and their agreement is
/// recorded.
pub fn run_rate_experiment(
    cfg: &ExperimentConfig,
    slope_tol: f64,
) -> Result<RateExperimentResult, ExperimentError> {
    let regime = classify_config(cfg)?;
    let params = cfg.params()?;
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    let mut overlap = Vec::new();
    for &n in &cfg.n_grid {
        let model = params.model(n)?;
        let g = rate_g(&regime, &model)?;
        let direct = n <= cfg.is_threshold_n;
        let (fa, md) = if direct {
            estimate_both(
                &model,
                EstimatorMethod::DirectMc,
                cfg.trials_direct,
                cfg.seed,
            )?
        } else {
            estimate_both(
                &model,
                EstimatorMethod::ImportanceSampled,
                cfg.trials_is,
                cfg.seed,
            )?
        };
        if n == cfg.is_threshold_n {
            let (fa_is, md_is) = estimate_both(
                &model,
                EstimatorMethod::ImportanceSampled,
                cfg.trials_is,
                cfg.seed,
            )?;
            for (kind, d, i) in [
                (ErrorKind::FalseAlarm, fa, fa_is),
                (ErrorKind::MissDetection, md, md_is),
            ] {
                let combined = (d.std_err * d.std_err + i.std_err * i.std_err).sqrt();
                let sigma = if combined > 0.0 {
                    (d.p_hat - i.p_hat).abs() / combined
                } else {
                    0.0
                };
                overlap.push(OverlapCheck {
                    n,
                    kind,
                    direct: d,
                    importance: i,
                    sigma,
                    pass: sigma <= 4.0,
                });
            }
        }
        rows.push(RateRow { n, g, fa, md });
    }

    let n_min = default_n_min(*cfg.n_grid.last().unwrap(), regime.rate_fn);
    let mut excluded = Vec::new();
    let mut fits = Vec::new();
    let mut any_points = false;
    for kind in [ErrorKind::FalseAlarm, ErrorKind::MissDetection] {
        let mut points = Vec::new();
        for row in &rows {
            let est = match kind {
                ErrorKind::FalseAlarm => &row.fa,
                ErrorKind::MissDetection => &row.md,
            };
            match RatePoint::from_estimate(row.n, row.g, est) {
                Some(p) => points.push(p),
                None => excluded.push(ExcludedPoint {
                    n: row.n,
                    kind,
                    reason: "estimate is zero; log undefined (use importance sampling here)".into(),
                }),
            }
        }
        any_points |= !points.is_empty();
        // The scaled transient cutoff can leave short grids with fewer than
        // three points; relax it just enough to keep the three largest n.
        let mut n_min_kind = n_min;
        let surviving = points.iter().filter(|p| p.n >= n_min_kind).count();
        if surviving < 3 && points.len() >= 3 {
            n_min_kind = points[points.len() - 3].n;
        }
        match fit_rate(&points, n_min_kind) {
            Ok(fit) => {
                let verdict = compare_to_theory(&fit, regime.rate_fn, &regime, kind, slope_tol)?;
                fits.push(FitOutcome::Fitted { kind, fit, verdict });
            }
            Err(e) => fits.push(FitOutcome::Unfittable {
                kind,
                reason: e.to_string(),
            }),
        }
    }
    if !any_points {
        return Err(ExperimentError::AllZero("either error kind"));
    }
    Ok(RateExperimentResult {
        regime,
        rows,
        excluded,
        overlap,
        fits,
        n_min_used: n_min,
        slope_tol,
    })
}

/// One cell of the adaptive comparison: a test at a false-alarm level and
/// sample size, with its calibrated threshold and estimated (or analytic)
/// miss-detection probability.
#[derive(Debug, Clone)]
pub struct AdaptiveRow {
    pub n: u64,
    pub level: f64,
    pub test: TestKind,
    pub threshold: CalibratedThreshold,
    pub p_md: f64,
    pub se_md: f64,
    /// "direct", "is", or "analytic".
    pub method: &'static str,
}

/// Miss-detection comparison of the configured tests at calibrated
/// false-alarm levels.
///
/// Thresholds for the LRT, HC and ACW tests come from an empirical null
/// quantile on a calibration stream family (`trials_direct` simulations,
/// shared across levels); the max test threshold and its miss probability
/// are computed analytically. Miss probabilities are then estimated on
/// evaluation streams disjoint from calibration: direct Monte Carlo, except
/// the LRT above `is_threshold_n` where importance sampling takes over.
pub fn run_adaptive_comparison(
    cfg: &ExperimentConfig,
) -> Result<Vec<AdaptiveRow>, ExperimentError> {
    let levels = match &cfg.fa_levels {
        FaLevels::Oracle => return Err(ExperimentError::OracleLevels),
        FaLevels::Levels(levels) => levels.clone(),
    };
    let params = cfg.params()?;
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let model = params.model(n)?;
        for &test in &cfg.tests {
            let statistic = match test {
                TestKind::Lrt => Statistic::Llr,
                TestKind::Max => Statistic::SampleMax,
                TestKind::Hc => Statistic::HigherCriticism(HcConfig::Full),
                TestKind::Acw => Statistic::AcwSign,
            };
            let thresholds =
                calibrate_thresholds(&statistic, &model, &levels, cfg.trials_direct, cfg.seed)?;
            for threshold in thresholds {
                let row = match test {
                    TestKind::Max => {
                        let (_, p_md) =
                            max_test_error_probs(n, model.eps(), model.mu(), threshold.threshold)?;
                        AdaptiveRow {
                            n,
                            level: threshold.level,
                            test,
                            threshold,
                            p_md,
                            se_md: 0.0,
                            method: "analytic",
                        }
                    }
                    TestKind::Lrt if n > cfg.is_threshold_n => {
                        let est = estimate_importance(
                            &model,
                            threshold.threshold,
                            ErrorKind::MissDetection,
                            cfg.trials_is,
                            cfg.seed,
                        )?;
                        AdaptiveRow {
                            n,
                            level: threshold.level,
                            test,
                            threshold,
                            p_md: est.p_hat,
                            se_md: est.std_err,
                            method: est.method.name(),
                        }
                    }
                    _ => {
                        let det = Detector {
                            statistic,
                            threshold: threshold.threshold,
                        };
                        let est = estimate_direct(
                            &det,
                            &model,
                            Hypothesis::Alternative,
                            cfg.trials_direct,
                            cfg.seed,
                        )?;
                        AdaptiveRow {
                            n,
                            level: threshold.level,
                            test,
                            threshold,
                            p_md: est.p_hat,
                            se_md: est.std_err,
                            method: est.method.name(),
                        }
                    }
                };
                if row.threshold.degenerate {
                    eprintln!(
                        "warning: degenerate threshold for {} at n={n}, level {}: \
                         the calibration sample cannot realize the requested level",
                        test.name(),
                        row.level
                    );
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// One cell of the regime-map sweep.
#[derive(Debug, Clone)]
pub struct RegimeMapRow {
    pub beta: f64,
    pub r: f64,
    pub class: RegimeClass,
}

/// Classify every point of a (beta, r) grid, for external plotting of the
/// phase diagram.
pub fn emit_regime_map(
    beta_grid: &[f64],
    r_grid: &[f64],
    scaling: Scaling,
) -> Result<Vec<RegimeMapRow>, ExperimentError> {
    let mut rows = Vec::with_capacity(beta_grid.len() * r_grid.len());
    for &beta in beta_grid {
        for &r in r_grid {
            let class = classify(beta, r, scaling)?;
            rows.push(RegimeMapRow { beta, r, class });
        }
    }
    Ok(rows)
}

/// Equispaced grid of `steps` interior points of (0, 1): (i + 1/2) / steps.
pub fn interior_grid(steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| (i as f64 + 0.5) / steps as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Output serialization
// ---------------------------------------------------------------------------

/// results.csv: one row per n.
pub fn rate_rows_csv(rows: &[RateRow]) -> String {
    let mut out = String::from("n,g,p_fa,se_fa,method_fa,p_md,se_md,method_md\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.n,
            row.g,
            row.fa.p_hat,
            row.fa.std_err,
            row.fa.method.name(),
            row.md.p_hat,
            row.md.std_err,
            row.md.method.name()
        ));
    }
    out
}

/// fits.json: regime, per-error fit and verdict, overlap checks, exclusions.
pub fn fits_json(result: &RateExperimentResult) -> serde_json::Value {
    use serde_json::json;
    let fits: Vec<serde_json::Value> = result
        .fits
        .iter()
        .map(|outcome| match outcome {
            FitOutcome::Fitted { kind, fit, verdict } => json!({
                "error_kind": kind.name(),
                "slope": fit.slope,
                "intercept": fit.intercept,
                "r2": fit.r_squared,
                "slope_stderr": fit.slope_stderr,
                "points": fit.points,
                "n_min": fit.n_min_used,
                "verdict": if !verdict.has_checks() {
                    "NO_CONSTANT"
                } else if verdict.pass {
                    "PASS"
                } else {
                    "FAIL"
                },
                "checks": verdict.checks.iter().map(|c| json!({
                    "rule": c.rule.name(),
                    "constant": c.constant,
                    "slope": c.slope,
                    "tol": c.tol,
                    "pass": c.pass,
                })).collect::<Vec<_>>(),
            }),
            FitOutcome::Unfittable { kind, reason } => json!({
                "error_kind": kind.name(),
                "verdict": "UNFITTABLE",
                "reason": reason,
            }),
        })
        .collect();
    json!({
        "regime": result.regime.regime.name(),
        "rate_fn": result.regime.rate_fn.name(),
        "constant_fa": result.regime.constant_fa.to_string(),
        "constant_md": result.regime.constant_md.to_string(),
        "slope_tol": result.slope_tol,
        "fits": fits,
        "overlap_checks": result.overlap.iter().map(|o| json!({
            "n": o.n,
            "error_kind": o.kind.name(),
            "p_direct": o.direct.p_hat,
            "se_direct": o.direct.std_err,
            "p_is": o.importance.p_hat,
            "se_is": o.importance.std_err,
            "combined_sigma": o.sigma,
            "pass": o.pass,
        })).collect::<Vec<_>>(),
        "excluded_points": result.excluded.iter().map(|e| json!({
            "n": e.n,
            "error_kind": e.kind.name(),
            "reason": e.reason,
        })).collect::<Vec<_>>(),
    })
}

fn threshold_method_name(m: &ThresholdMethod) -> String {
    match m {
        ThresholdMethod::EmpiricalQuantile { null_sims } => format!("empirical({null_sims})"),
        ThresholdMethod::AnalyticMaxTest => "analytic".to_string(),
    }
}

/// adaptive.csv: one row per (n, test, level).
pub fn adaptive_rows_csv(rows: &[AdaptiveRow]) -> String {
    let mut out = String::from("n,fa_level,test,threshold,threshold_method,p_md,se_md,method\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.n,
            row.level,
            row.test.name(),
            row.threshold.threshold,
            threshold_method_name(&row.threshold.method),
            row.p_md,
            row.se_md,
            row.method
        ));
    }
    out
}

/// regime_map.csv: one row per grid point.
pub fn regime_map_csv(rows: &[RegimeMapRow]) -> String {
    let mut out = String::from("beta,r,regime,rate_fn,constant_fa,constant_md\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.beta,
            row.r,
            row.class.regime.name(),
            row.class.rate_fn.name(),
            row.class.constant_fa,
            row.class.constant_md
        ));
    }
    out
}

/// thresholds.csv for the calibrate command.
pub fn thresholds_csv(rows: &[(u64, TestKind, CalibratedThreshold)]) -> String {
    let mut out = String::from("n,test,level,threshold,method,degenerate\n");
    for (n, test, t) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            n,
            test.name(),
            t.level,
            t.threshold,
            threshold_method_name(&t.method),
            t.degenerate
        ));
    }
    out
}
