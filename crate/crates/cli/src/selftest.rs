//! Built-in verification suite: every check recomputes its expected value
//! through an independent route (high-precision reference constants,
//! brute-force enumeration, closed forms) and compares the library against
//! it. `mixdetect selftest` exits zero only if all checks pass.

use mixdetect::detectors::{
    acw_statistic, hc_statistic, max_statistic, max_test_error_probs, HcConfig,
};
use mixdetect::discrete::DiscreteMixtureModel;
use mixdetect::estimation::{analytic_max_threshold, estimate_importance, ErrorKind};
use mixdetect::ratefit::{fit_rate, RatePoint};
use mixdetect::regimes::{classify, critical_r, Regime, Scaling};
use mixdetect::rng::{trial_rng, StreamDomain};
use mixdetect::special::{q_bounds, std_normal_quantile, std_normal_sf};
use mixdetect::{GaussianModel, Hypothesis};
use rand::Rng;

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

pub fn run_selftest() -> Vec<Check> {
    let mut checks = Vec::new();

    // Normal tail values against 60-digit references.
    {
        let e1 = rel_err(std_normal_sf(5.0), 2.866_515_718_791_939e-7);
        let e2 = rel_err(std_normal_quantile(0.975).unwrap(), 1.9599639845400542);
        let pass = e1 < 1e-13 && e2 < 1e-13;
        checks.push(check(
            "normal-tail-reference",
            pass,
            format!("sf(5) rel err {e1:.2e}, quantile(0.975) rel err {e2:.2e}"),
        ));
    }

    // Tail sandwich brackets the survival function on {0.1, ..., 30}.
    {
        let mut worst = f64::INFINITY;
        let mut ok = true;
        for i in 1..=300 {
            let x = i as f64 / 10.0;
            let (lo, hi) = q_bounds(x).unwrap();
            let q = std_normal_sf(x);
            ok &= lo <= q && q <= hi;
            worst = worst.min((hi - q).min(q - lo));
        }
        checks.push(check(
            "q-bounds-bracket",
            ok,
            format!("min slack {worst:.3e} over 300 grid points"),
        ));
    }

    // Log-likelihood-ratio spot values against extended-precision references.
    {
        let m = GaussianModel::new(2, 0.1, 2.0).unwrap();
        let e1 = rel_err(m.llr(&[3.0, -1.0]).unwrap(), 1.746_671_776_777_794_2);
        let m = GaussianModel::new(1, 0.5, 1.0).unwrap();
        let e2 = rel_err(m.llr(&[2.0]).unwrap(), 1.008_266_097_422_807);
        let pass = e1 < 1e-13 && e2 < 1e-13;
        checks.push(check(
            "llr-reference",
            pass,
            format!("rel errs {e1:.2e}, {e2:.2e}"),
        ));
    }

    // Max-test calibration round trip at three sample sizes.
    {
        let mut worst: f64 = 0.0;
        for &n in &[10u64, 1_000, 1_000_000] {
            for &alpha in &[0.05f64, 0.10] {
                let tau = analytic_max_threshold(n, alpha).unwrap();
                let (p_fa, _) = max_test_error_probs(n, 0.3, 1.0, tau).unwrap();
                worst = worst.max((p_fa - alpha).abs());
            }
        }
        checks.push(check(
            "max-test-round-trip",
            worst <= 1e-10,
            format!("max |achieved - target| = {worst:.2e}"),
        ));
    }

    // Published max-test miss probability, computed analytically.
    {
        let n = 1000u64;
        let eps = 10f64.powf(-1.8);
        let mu = (2.0 * 0.66 * (n as f64).ln()).sqrt();
        let tau = analytic_max_threshold(n, 0.05).unwrap();
        let (_, p_md) = max_test_error_probs(n, eps, mu, tau).unwrap();
        let pass = rel_err(p_md, 4.400330e-2) < 1e-4;
        checks.push(check(
            "max-test-published-miss",
            pass,
            format!("p_md = {p_md:.6e}, reference 4.400330e-2"),
        ));
    }

    // HC and ACW against brute-force enumeration on random instances.
    {
        let mut ok = true;
        let domain = StreamDomain::evaluation(Hypothesis::Null, 64);
        for trial in 0..200u64 {
            let mut rng = trial_rng(1234, domain, trial);
            let n = 1 + (rng.gen::<u64>() % 64) as usize;
            let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 8.0 - 4.0).collect();
            let hc = hc_statistic(&xs, HcConfig::Full).unwrap();
            ok &= hc == hc_bruteforce(&xs);
            let acw = acw_statistic(&xs).unwrap();
            ok &= acw == acw_bruteforce(&xs);
            let mx = max_statistic(&xs).unwrap();
            ok &= mx == xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !ok {
                break;
            }
        }
        checks.push(check(
            "statistic-bruteforce",
            ok,
            "200 random instances, n <= 64, exact match".into(),
        ));
    }

    // Boundary continuity and regime partition.
    {
        let both = (critical_r(0.75).unwrap() - 0.25).abs() == 0.0;
        let mut partition = true;
        for i in 0..50 {
            for j in 0..50 {
                let beta = 0.5 + (i as f64 + 0.5) / 100.0;
                let r = (j as f64 + 0.5) / 50.0;
                let class = classify(beta, r, Scaling::SparseR).unwrap();
                let crit = critical_r(beta).unwrap();
                let expect = if r < crit {
                    Regime::Undetectable
                } else if beta < 0.75 && r < beta / 3.0 {
                    Regime::ModeratelySparseWeak
                } else if r > beta {
                    Regime::Strong
                } else {
                    Regime::Moderate
                };
                partition &= class.regime == expect;
            }
        }
        checks.push(check(
            "regime-partition",
            both && partition,
            "critical r continuous at 3/4; 50x50 grid partitions".into(),
        ));
    }

    // Importance sampling against exact enumeration on the discrete toy.
    {
        let m = DiscreteMixtureModel::gaussian(2, 0.1, 2.0, -5.0, 5.0, 41).unwrap();
        let (p_fa, p_md) = m.enumerate_error_probs(0.0);
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for seed in 0..20u64 {
            let fa = estimate_importance(&m, 0.0, ErrorKind::FalseAlarm, 50_000, seed).unwrap();
            let md = estimate_importance(&m, 0.0, ErrorKind::MissDetection, 50_000, seed).unwrap();
            let s1 = (fa.p_hat - p_fa).abs() / fa.std_err;
            let s2 = (md.p_hat - p_md).abs() / md.std_err;
            worst = worst.max(s1).max(s2);
            ok &= s1 <= 4.0 && s2 <= 4.0;
        }
        checks.push(check(
            "importance-vs-enumeration",
            ok,
            format!("worst deviation {worst:.2} sigma over 20 seeds"),
        ));
    }

    // Least squares recovers a noiseless line.
    {
        let points: Vec<RatePoint> = (1..=8)
            .map(|i| RatePoint {
                n: i,
                g_value: i as f64,
                log_p: -0.125 * i as f64 + 0.3,
                log_p_stderr: 0.0,
            })
            .collect();
        let fit = fit_rate(&points, 0).unwrap();
        let pass = (fit.slope + 0.125).abs() < 1e-12 && fit.r_squared > 1.0 - 1e-12;
        checks.push(check(
            "ols-noiseless-line",
            pass,
            format!("slope {}, r2 {}", fit.slope, fit.r_squared),
        ));
    }

    checks
}

fn hc_bruteforce(xs: &[f64]) -> f64 {
    let n = xs.len();
    let mut ps: Vec<f64> = xs.iter().map(|&x| std_normal_sf(x)).collect();
    // selection sort ascending
    for i in 0..n {
        let mut min = i;
        for j in i + 1..n {
            if ps[j] < ps[min] {
                min = j;
            }
        }
        ps.swap(i, min);
    }
    let mut best = f64::NEG_INFINITY;
    for i in 1..=n {
        let p = ps[i - 1];
        if p <= 0.0 || p >= 1.0 {
            continue;
        }
        let term = (n as f64).sqrt() * (i as f64 / n as f64 - p) / (p * (1.0 - p)).sqrt();
        if term > best {
            best = term;
        }
    }
    best
}

fn acw_bruteforce(xs: &[f64]) -> f64 {
    let n = xs.len();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut ordered = Vec::with_capacity(n);
    while !remaining.is_empty() {
        let mut best = 0;
        for j in 1..remaining.len() {
            if xs[remaining[j]].abs() > xs[remaining[best]].abs() {
                best = j;
            }
        }
        ordered.push(remaining.remove(best));
    }
    let mut best = f64::NEG_INFINITY;
    for k in 1..=n {
        let mut s = 0i64;
        for &idx in &ordered[..k] {
            s += if xs[idx] > 0.0 {
                1
            } else if xs[idx] < 0.0 {
                -1
            } else {
                0
            };
        }
        let v = s as f64 / (k as f64).sqrt();
        if v > best {
            best = v;
        }
    }
    best
}
