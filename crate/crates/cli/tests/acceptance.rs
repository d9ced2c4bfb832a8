//! Acceptance suite: every numbered criterion the deliverable is gated on,
//! one test per criterion, each printing a PASS line with its measurements
//! (visible under `cargo test -- --nocapture`).
//!
//! Published reference values come from the source tables; exact expected
//! values for the discretized model are enumerated in rational arithmetic
//! inside the tests themselves.

use mixdetect::detectors::{
    acw_statistic, hc_statistic, max_statistic, max_test_error_probs, HcConfig,
};
use mixdetect::discrete::DiscreteMixtureModel;
use mixdetect::estimation::{
    analytic_max_threshold, estimate_importance, ErrorKind, EstimatorMethod,
};
use mixdetect::ratefit::{fit_rate, RatePoint};
use mixdetect::regimes::{classify, critical_r, Regime, Scaling};
use mixdetect::rng::{trial_rng, StreamDomain};
use mixdetect::special::{q_bounds, std_normal_sf};
use mixdetect::Hypothesis;
use mixdetect_cli::config::ExperimentConfig;
use mixdetect_cli::experiment::run_rate_experiment;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use std::time::Instant;

fn config(doc: &str) -> ExperimentConfig {
    ExperimentConfig::parse(doc).expect("valid test config")
}

fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

/// Criterion 1: oracle-LRT error probabilities at beta = 0.6, r = 0.19
/// reproduce the published table for n in {10, 1e2, 1e3, 1e4} within
/// max(3 standard errors, 0.01), with at least 5e4 direct trials.
#[test]
fn criterion_1_weak_signal_table_reproduction() {
    let start = Instant::now();
    let cfg = config(
        "beta = 0.6\nsignal_kind = sparse_r\nr = 0.19\n\
         n_grid = 10, 100, 1000, 10000\n\
         trials_direct = 50000\nis_threshold_n = 100000\nseed = 2021\n",
    );
    // The runtime budget is stated single-threaded; run it that way.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let result = pool
        .install(|| run_rate_experiment(&cfg, 0.05))
        .expect("rate experiment runs");
    // Published values: (n, P_FA, P_MD).
    let reference = [
        (10u64, 0.307, 0.388),
        (100, 0.258, 0.320),
        (1000, 0.213, 0.256),
        (10000, 0.166, 0.193),
    ];
    for (n, fa_ref, md_ref) in reference {
        let row = result.rows.iter().find(|r| r.n == n).unwrap();
        assert_eq!(row.fa.method, EstimatorMethod::DirectMc);
        assert!(row.fa.trials >= 50_000);
        for (est, want) in [(&row.fa, fa_ref), (&row.md, md_ref)] {
            let tol = (3.0 * est.std_err).max(0.01);
            assert!(
                (est.p_hat - want).abs() <= tol,
                "n={n}: {} vs published {want} (tol {tol})",
                est.p_hat
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 300,
        "runtime budget exceeded: {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 1 (weak-signal table): PASS: all 8 cells within max(3se, 0.01), {:.1?}",
        elapsed
    );
}

/// Criterion 2: strong-signal table at beta = 0.6, r = 0.66. Direct Monte
/// Carlo for n <= 1e3, importance sampling at n = 1e4; the IS estimates land
/// within a factor of two of the published 5.38e-5 / 8.83e-5 with relative
/// standard error at most 25%.
#[test]
fn criterion_2_strong_signal_table_reproduction() {
    let start = Instant::now();
    let cfg = config(
        "beta = 0.6\nsignal_kind = sparse_r\nr = 0.66\n\
         n_grid = 10, 100, 1000, 10000\n\
         trials_direct = 20000\ntrials_is = 500000\nis_threshold_n = 1000\nseed = 2022\n",
    );
    let result = run_rate_experiment(&cfg, 0.05).expect("rate experiment runs");
    for row in &result.rows {
        let expect_is = row.n > 1000;
        for est in [&row.fa, &row.md] {
            assert_eq!(
                est.method == EstimatorMethod::ImportanceSampled,
                expect_is,
                "method at n={}",
                row.n
            );
        }
    }
    let row = result.rows.iter().find(|r| r.n == 10_000).unwrap();
    for (est, published, label) in [(&row.fa, 5.38e-5, "P_FA"), (&row.md, 8.83e-5, "P_MD")] {
        let ratio = est.p_hat / published;
        assert!(
            (0.5..=2.0).contains(&ratio),
            "{label} = {} vs published {published} (ratio {ratio:.3})",
            est.p_hat
        );
        assert!(
            est.rel_std_err() <= 0.25,
            "{label} relative std err {:.3}",
            est.rel_std_err()
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 600,
        "runtime budget exceeded: {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 2 (strong-signal table): PASS: IS at n=1e4: fa {:.3e}, md {:.3e}, {:.1?}",
        row.fa.p_hat, row.md.p_hat, elapsed
    );
}

/// Criterion 3: max-test analytics. Calibration round-trips to 1e-10 for
/// n in {10, 1e3, 1e6}, and the published miss probability 4.40e-2
/// (n = 1e3, level 0.05, beta = 0.6, r = 0.66) is reproduced to three
/// significant figures with no sampling.
#[test]
fn criterion_3_max_test_analytics() {
    let start = Instant::now();
    for &n in &[10u64, 1_000, 1_000_000] {
        for &level in &[0.05f64, 0.10] {
            let tau = analytic_max_threshold(n, level).unwrap();
            let (p_fa, _) = max_test_error_probs(n, 0.2, 1.5, tau).unwrap();
            assert!(
                (p_fa - level).abs() <= 1e-10,
                "round trip n={n} level={level}: achieved {p_fa}"
            );
        }
    }
    let n = 1000u64;
    let eps = 10f64.powf(-1.8);
    let mu = (2.0 * 0.66 * (n as f64).ln()).sqrt();
    let tau = analytic_max_threshold(n, 0.05).unwrap();
    let (_, p_md) = max_test_error_probs(n, eps, mu, tau).unwrap();
    assert_eq!(round_sig(p_md, 3), 4.40e-2, "analytic miss {p_md}");
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_millis() < 1000,
        "runtime budget exceeded: {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 3 (max-test analytics): PASS: round trips <= 1e-10, miss {:.4e} -> 4.40e-2, {:.1?}",
        p_md, elapsed
    );
}

/// Criterion 4: dense-case slopes. beta = 0.4, mu = 1, n up to 1e6 with
/// importance sampling above 1e5; fitting log error probabilities against
/// n eps^2 (e^{mu^2}-1) over the top decade of n puts both slopes inside
/// [-0.18, -0.07] (the -1/8 prediction; the full-scale experiment reported
/// -0.13 and -0.12).
#[test]
fn criterion_4_dense_case_slope() {
    let start = Instant::now();
    let cfg = config(
        "beta = 0.4\nsignal_kind = dense_power\nr = 0\n\
         n_grid = 10000, 21544, 46416, 100000, 215443, 464159, 1000000\n\
         trials_direct = 4000\ntrials_is = 4000\nis_threshold_n = 100000\nseed = 2023\n",
    );
    let result = run_rate_experiment(&cfg, 0.055).expect("rate experiment runs");
    let mut slopes = Vec::new();
    for kind in [ErrorKind::FalseAlarm, ErrorKind::MissDetection] {
        let points: Vec<RatePoint> = result
            .rows
            .iter()
            .filter_map(|row| {
                let est = match kind {
                    ErrorKind::FalseAlarm => &row.fa,
                    ErrorKind::MissDetection => &row.md,
                };
                RatePoint::from_estimate(row.n, row.g, est)
            })
            .collect();
        // Top decade of n: the published analysis discards the transient.
        let fit = fit_rate(&points, 100_000).expect("enough points in the top decade");
        assert!(
            fit.slope >= -0.18 && fit.slope <= -0.07,
            "{} slope {} outside [-0.18, -0.07]",
            kind.name(),
            fit.slope
        );
        slopes.push((kind, fit.slope));
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 900,
        "runtime budget exceeded: {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 4 (dense-case slope): PASS: fa slope {:.4}, md slope {:.4} vs -1/8, {:.1?}",
        slopes[0].1, slopes[1].1, elapsed
    );
}

// --- exact-arithmetic machinery for criteria 5 and 6 -----------------------

struct ExactDiscreteModel {
    null_pmf: Vec<BigRational>,
    alt_pmf: Vec<BigRational>,
}

fn big(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite weight")
}

impl ExactDiscreteModel {
    /// Rationalize the exact f64 density values on the grid and renormalize
    /// in exact arithmetic; eps = 1/10, mu = 2, grid of 41 points on [-5, 5].
    fn toy() -> Self {
        let grid: Vec<f64> = (0..41).map(|i| -5.0 + 0.25 * i as f64).collect();
        let eps = BigRational::new(BigInt::from(1), BigInt::from(10));
        let one = BigRational::from_integer(BigInt::from(1));
        let null_w: Vec<BigRational> = grid
            .iter()
            .map(|&x| big(mixdetect::special::std_normal_pdf(x)))
            .collect();
        let alt_w: Vec<BigRational> = grid
            .iter()
            .map(|&x| {
                (&one - &eps) * big(mixdetect::special::std_normal_pdf(x))
                    + &eps * big(mixdetect::special::std_normal_pdf(x - 2.0))
            })
            .collect();
        let s0: BigRational = null_w.iter().sum();
        let s1: BigRational = alt_w.iter().sum();
        ExactDiscreteModel {
            null_pmf: null_w.into_iter().map(|w| w / &s0).collect(),
            alt_pmf: alt_w.into_iter().map(|w| w / &s1).collect(),
        }
    }

    /// Exact (P_FA, P_MD) of the likelihood-ratio test at threshold zero
    /// (reject when the alternative mass of the outcome is at least the null
    /// mass), plus the minimum of (P_FA + P_MD)/2 over all deterministic
    /// tests. The average error of any test decomposes over outcomes, so the
    /// minimum over all 2^(41^n) tests is the per-outcome minimum sum.
    fn lrt_vs_best(&self, n: usize) -> (BigRational, BigRational, BigRational) {
        let k = self.null_pmf.len();
        let mut idx = vec![0usize; n];
        let mut p_fa = BigRational::zero();
        let mut p_md = BigRational::zero();
        let mut best = BigRational::zero();
        loop {
            let mut q = BigRational::from_integer(BigInt::from(1));
            let mut p = BigRational::from_integer(BigInt::from(1));
            for &i in &idx {
                q *= &self.null_pmf[i];
                p *= &self.alt_pmf[i];
            }
            if p >= q {
                p_fa += &q;
            } else {
                p_md += &p;
            }
            best += if p < q { p } else { q };
            let mut pos = 0;
            loop {
                if pos == n {
                    let two = BigRational::from_integer(BigInt::from(2));
                    return (p_fa, p_md, best / two);
                }
                idx[pos] += 1;
                if idx[pos] < k {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }
}

/// Criterion 5: oracle optimality on the discretized model. For n in {1, 2},
/// exhaustive per-outcome enumeration in exact rational arithmetic confirms
/// that no deterministic test achieves a smaller average error than the
/// threshold-zero likelihood ratio test, and the floating-point
/// implementation agrees with the exact decisions.
#[test]
fn criterion_5_oracle_optimality_exact() {
    let start = Instant::now();
    let exact = ExactDiscreteModel::toy();
    for n in [1usize, 2] {
        let (p_fa, p_md, best) = exact.lrt_vs_best(n);
        let two = BigRational::from_integer(BigInt::from(2));
        let avg = (&p_fa + &p_md) / &two;
        assert_eq!(
            avg, best,
            "n={n}: LRT average error differs from the minimum"
        );

        // The production model (f64 pmfs) must agree to float accuracy and
        // make identical decisions on every outcome.
        let m = DiscreteMixtureModel::gaussian(n, 0.1, 2.0, -5.0, 5.0, 41).unwrap();
        let (f_fa, f_md) = m.enumerate_error_probs(0.0);
        let exact_fa = rational_to_f64(&p_fa);
        let exact_md = rational_to_f64(&p_md);
        assert!(
            (f_fa - exact_fa).abs() < 1e-12,
            "n={n}: fa {f_fa} vs {exact_fa}"
        );
        assert!(
            (f_md - exact_md).abs() < 1e-12,
            "n={n}: md {f_md} vs {exact_md}"
        );
        assert!(
            (m.min_average_error() - rational_to_f64(&best)).abs() < 1e-12,
            "n={n}: minimum average error mismatch"
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 30,
        "runtime budget exceeded: {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 5 (oracle optimality, exact): PASS: LRT attains the enumerated minimum, {:.1?}",
        elapsed
    );
}

fn rational_to_f64(r: &BigRational) -> f64 {
    // Scale into the f64 range before converting.
    let scale: BigInt = BigInt::from(1u64) << 60u32;
    let scaled = r * BigRational::from_integer(scale);
    let int = scaled.to_integer();
    let approx = i128::try_from(int)
        .map(|v| v as f64)
        .unwrap_or(f64::INFINITY);
    approx / (1u64 << 60) as f64
}

/// Criterion 6: importance-sampling unbiasedness on the discretized toy
/// model. Over 200 seeded runs, the IS estimate lands within four standard
/// errors of the exact enumerated probability at least 95% of the time.
#[test]
fn criterion_6_importance_unbiasedness() {
    let m = DiscreteMixtureModel::gaussian(2, 0.1, 2.0, -5.0, 5.0, 41).unwrap();
    let (p_fa, p_md) = m.enumerate_error_probs(0.0);
    let runs = 200u64;
    let trials = 20_000u64;
    let mut ok_fa = 0;
    let mut ok_md = 0;
    for seed in 0..runs {
        let fa = estimate_importance(&m, 0.0, ErrorKind::FalseAlarm, trials, seed).unwrap();
        let md = estimate_importance(&m, 0.0, ErrorKind::MissDetection, trials, seed).unwrap();
        if (fa.p_hat - p_fa).abs() <= 4.0 * fa.std_err {
            ok_fa += 1;
        }
        if (md.p_hat - p_md).abs() <= 4.0 * md.std_err {
            ok_md += 1;
        }
    }
    let need = (runs as f64 * 0.95).ceil() as u64;
    assert!(
        ok_fa >= need,
        "false alarm: only {ok_fa}/{runs} within 4 se"
    );
    assert!(
        ok_md >= need,
        "miss detection: only {ok_md}/{runs} within 4 se"
    );
    println!(
        "ACCEPTANCE 6 (importance unbiasedness): PASS: fa {ok_fa}/{runs}, md {ok_md}/{runs} within 4 se"
    );
}

/// Criterion 7: statistic oracles. HC and ACW match O(n^2) brute-force
/// enumeration exactly on 1000 random instances with n <= 64; the max
/// statistic matches a linear scan.
#[test]
fn criterion_7_statistic_bruteforce_oracles() {
    let domain = StreamDomain::evaluation(Hypothesis::Null, 64);
    for trial in 0..1000u64 {
        let mut rng = trial_rng(9090, domain, trial);
        let n = 1 + (rng.gen::<u64>() % 64) as usize;
        let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 9.0 - 4.5).collect();
        assert_eq!(
            hc_statistic(&xs, HcConfig::Full).unwrap(),
            hc_bruteforce(&xs),
            "HC mismatch on trial {trial}"
        );
        assert_eq!(
            acw_statistic(&xs).unwrap(),
            acw_bruteforce(&xs),
            "ACW mismatch on trial {trial}"
        );
        let scan = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(
            max_statistic(&xs).unwrap(),
            scan,
            "max mismatch on trial {trial}"
        );
    }
    println!("ACCEPTANCE 7 (statistic oracles): PASS: 1000 instances, exact agreement");
}

/// Criterion 8: boundary and regime suite. The critical curve is continuous
/// at beta = 3/4 (both branch formulas give exactly 1/4); a 50x50 grid over
/// (0.5, 1) x (0, 1) partitions into the expected regimes; the Gaussian tail
/// sandwich brackets the survival function on {0.1, ..., 30}.
#[test]
fn criterion_8_boundary_regime_suite() {
    let start = Instant::now();
    assert_eq!(critical_r(0.75).unwrap(), 0.25);
    assert_eq!(0.75f64 - 0.5, 0.25);
    let t = 1.0 - (1.0f64 - 0.75).sqrt();
    assert_eq!(t * t, 0.25);

    let mut counts = [0usize; 4];
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
            assert_eq!(class.regime, expect, "partition at beta={beta}, r={r}");
            match class.regime {
                Regime::Undetectable => counts[0] += 1,
                Regime::ModeratelySparseWeak => counts[1] += 1,
                Regime::Moderate => counts[2] += 1,
                Regime::Strong => counts[3] += 1,
                other => panic!("unexpected {other:?} on the open grid"),
            }
        }
    }
    assert!(
        counts.iter().all(|&c| c > 0),
        "all four regimes present: {counts:?}"
    );

    for i in 1..=300 {
        let x = i as f64 / 10.0;
        let (lo, hi) = q_bounds(x).unwrap();
        let q = std_normal_sf(x);
        assert!(lo <= q && q <= hi, "tail sandwich violated at x={x}");
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 10,
        "runtime budget exceeded: {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 8 (boundary/regime suite): PASS: partition counts {counts:?}, {:.1?}",
        elapsed
    );
}

/// Criterion 9: determinism. The same experiment rerun with 1 and 4 worker
/// threads produces byte-identical CSV (and JSON) output.
#[test]
fn criterion_9_thread_count_determinism() {
    let exe = env!("CARGO_BIN_EXE_mixdetect");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg_path,
        "beta = 0.6\nsignal_kind = sparse_r\nr = 0.19\n\
         n_grid = 10, 100, 1000\n\
         tests = lrt, max, hc, acw\nfa_levels = 0.05, 0.10\n\
         trials_direct = 2000\ntrials_is = 2000\nis_threshold_n = 100\nseed = 11\n",
    )
    .unwrap();
    let run = |threads: &str, sub: &str, out: &str| {
        let out_dir = dir.path().join(out);
        let status = std::process::Command::new(exe)
            .args([
                sub,
                "--config",
                cfg_path.to_str().unwrap(),
                "--threads",
                threads,
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::null())
            .status()
            .expect("binary runs");
        assert!(status.code().is_some(), "binary terminated abnormally");
        out_dir
    };
    let a = run("1", "rate", "rate1");
    let b = run("4", "rate", "rate4");
    for name in ["results.csv", "fits.json"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between thread counts");
    }
    let a = run("1", "adaptive", "ad1");
    let b = run("4", "adaptive", "ad4");
    let x = std::fs::read(a.join("adaptive.csv")).unwrap();
    let y = std::fs::read(b.join("adaptive.csv")).unwrap();
    assert_eq!(x, y, "adaptive.csv differs between thread counts");
    println!("ACCEPTANCE 9 (determinism): PASS: byte-identical outputs at 1 and 4 threads");
}

// O(n^2) oracles: selection sorts plus full term/prefix enumeration.

fn hc_bruteforce(xs: &[f64]) -> f64 {
    let n = xs.len();
    let mut ps: Vec<f64> = xs.iter().map(|&x| std_normal_sf(x)).collect();
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
