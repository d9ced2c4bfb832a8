//! Least-squares fitting of log error probabilities against a theoretical
//! rate function g(n), and comparison of the fitted slope with the
//! theory constants.
//!
//! If `log P_err(n) / g(n) -> -c`, plotting `log P_err` against `g(n)` gives
//! asymptotic slope `-c`; the fit is ordinary (unweighted) least squares over
//! the points with n above a transient cutoff, matching how the best-fit
//! lines in the source experiments were produced. Delta-method standard
//! errors of `log p` are recorded on each point but deliberately not used as
//! weights.

use crate::error::{Error, Result};
use crate::estimation::{ErrorEstimate, ErrorKind};
use crate::regimes::{RateConstant, RateFn, RegimeClass};

/// One (g(n), log p) observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub n: u64,
    pub g_value: f64,
    pub log_p: f64,
    /// Delta-method standard error of `log p`: std_err / p_hat.
    pub log_p_stderr: f64,
}

impl RatePoint {
    /// Build a point from an estimate; `None` when the estimate is zero
    /// (log undefined; the caller should record the exclusion and use
    /// importance sampling at that n instead).
    pub fn from_estimate(n: u64, g_value: f64, est: &ErrorEstimate) -> Option<RatePoint> {
        if est.p_hat > 0.0 {
            Some(RatePoint {
                n,
                g_value,
                log_p: est.p_hat.ln(),
                log_p_stderr: est.std_err / est.p_hat,
            })
        } else {
            None
        }
    }
}

/// Ordinary least-squares fit of log p on g(n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// OLS standard error of the slope.
    pub slope_stderr: f64,
    /// Sample-size cutoff actually applied.
    pub n_min_used: u64,
    /// Number of points in the fit.
    pub points: usize,
}

/// Fit log p against g over the points with n >= n_min. Needs at least three
/// usable points and a non-degenerate spread of g values.
pub fn fit_rate(points: &[RatePoint], n_min: u64) -> Result<RateFit> {
    let used: Vec<&RatePoint> = points.iter().filter(|p| p.n >= n_min).collect();
    let k = used.len();
    if k < 3 {
        return Err(Error::TooFewPoints { need: 3, got: k });
    }
    let kf = k as f64;
    let mean_g = used.iter().map(|p| p.g_value).sum::<f64>() / kf;
    let mean_y = used.iter().map(|p| p.log_p).sum::<f64>() / kf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for p in &used {
        let dx = p.g_value - mean_g;
        let dy = p.log_p - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_g;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let slope_stderr = if k > 2 {
        (ss_res / (kf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
        n_min_used: n_min,
        points: k,
    })
}

/// Default transient cutoff for a rate fit: the source experiments discarded
/// n below 350000 (dense case) out of a maximum of 2e7; scale that fraction
/// of the top sample size down to the experiment actually run.
pub fn default_n_min(max_n: u64, regime_rate: RateFn) -> u64 {
    let frac = match regime_rate {
        // dense case: 350000 / 2e7
        RateFn::NEps2D2 => 0.0175,
        // everything else mirrors the moderately-sparse 100000 / 2e7
        _ => 0.005,
    };
    (max_n as f64 * frac).round() as u64
}

/// How one theory check compares the fitted slope to a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckRule {
    /// |slope - c| <= tol.
    ExactLimit,
    /// slope <= c + tol.
    UpperBound,
    /// slope >= c - tol (the universal miss-detection floor).
    LowerFloor,
}

impl CheckRule {
    pub fn name(&self) -> &'static str {
        match self {
            CheckRule::ExactLimit => "exact_limit",
            CheckRule::UpperBound => "upper_bound",
            CheckRule::LowerFloor => "lower_floor",
        }
    }
}

/// One slope-versus-constant comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCheck {
    pub rule: CheckRule,
    pub constant: f64,
    pub slope: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Verdict of comparing a fit against the regime's theory.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryVerdict {
    pub kind: ErrorKind,
    pub checks: Vec<TheoryCheck>,
    /// True when every applicable check passes (vacuously true when the
    /// regime characterizes nothing for this error kind).
    pub pass: bool,
}

impl TheoryVerdict {
    /// False when the regime has no constant to compare against for this
    /// error kind.
    pub fn has_checks(&self) -> bool {
        !self.checks.is_empty()
    }
}

/// Compare a fitted slope with the regime's constant for the given error
/// kind.
///
/// Exact-limit constants demand |slope - c| <= tol; upper-bound constants
/// demand slope <= c + tol. When the rate function is `n eps`, the universal
/// miss-detection floor (slope >= -1 - tol) is checked as well. The fit must
/// have been computed against the same rate function the regime prescribes
/// (`fit_rate_fn` records which one was used); a mismatch is an error, not a
/// verdict. When the regime characterizes nothing for the requested error
/// kind, the verdict carries no checks and passes vacuously.
pub fn compare_to_theory(
    fit: &RateFit,
    fit_rate_fn: RateFn,
    regime: &RegimeClass,
    kind: ErrorKind,
    tol: f64,
) -> Result<TheoryVerdict> {
    if fit_rate_fn != regime.rate_fn {
        return Err(Error::RateFunctionMismatch {
            fit: fit_rate_fn,
            regime: regime.rate_fn,
        });
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be finite and nonnegative, got {tol}"
        )));
    }
    let constant = match kind {
        ErrorKind::FalseAlarm => regime.constant_fa,
        ErrorKind::MissDetection => regime.constant_md,
    };
    let mut checks = Vec::new();
    match constant {
        RateConstant::Exact(c) => {
            checks.push(TheoryCheck {
                rule: CheckRule::ExactLimit,
                constant: c,
                slope: fit.slope,
                tol,
                pass: (fit.slope - c).abs() <= tol,
            });
        }
        RateConstant::UpperBound(c) => {
            checks.push(TheoryCheck {
                rule: CheckRule::UpperBound,
                constant: c,
                slope: fit.slope,
                tol,
                pass: fit.slope <= c + tol,
            });
        }
        RateConstant::Indeterminate => {}
    }
    if kind == ErrorKind::MissDetection && regime.rate_fn == RateFn::NEps {
        // Universal floor: no test's miss probability decays faster than
        // e^{-n eps}.
        checks.push(TheoryCheck {
            rule: CheckRule::LowerFloor,
            constant: -1.0,
            slope: fit.slope,
            tol,
            pass: fit.slope >= -1.0 - tol,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(TheoryVerdict { kind, checks, pass })
}
