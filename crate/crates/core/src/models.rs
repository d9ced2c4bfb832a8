//! The sparse Gaussian mixture model: parameterization, per-n instantiation,
//! likelihood ratios, chi-squared divergence, and reproducible sampling.
//!
//! Under the null the samples are standard normal; under the alternative each
//! sample is independently contaminated with probability `eps_n = n^-beta` by
//! a unit-variance Gaussian shifted to `mu_n`. The per-sample likelihood
//! ratio is `L(x) = exp(mu x - mu^2/2)` and the log-likelihood ratio of a
//! whole sample is `sum_i log(1 - eps + eps L(x_i))`.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Which hypothesis a sample is drawn under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    Null,
    Alternative,
}

/// How the signal strength `mu_n` scales with the sample size.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalSpec {
    /// `mu_n = sqrt(2 r log n)`, the calibration used on the sparse side of
    /// the phase diagram.
    SparseR { r: f64 },
    /// `mu_n = n^r` (r <= 0 in the dense regime; r = 0 gives a constant
    /// signal).
    DensePower { r: f64 },
    /// An explicit `(n, mu_n)` table.
    Explicit(Vec<(u64, f64)>),
}

/// Full parameterization of a sequence of mixture detection problems:
/// sparsity exponent beta (so `eps_n = n^-beta`) plus the signal scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    beta: f64,
    signal: SignalSpec,
}

impl ModelParams {
    pub fn new(beta: f64, signal: SignalSpec) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {beta}"
            )));
        }
        match &signal {
            SignalSpec::SparseR { r } => {
                if !(r.is_finite() && *r > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "sparse signal index r must be positive, got {r}"
                    )));
                }
            }
            SignalSpec::DensePower { r } => {
                if !r.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "dense power exponent must be finite, got {r}"
                    )));
                }
            }
            SignalSpec::Explicit(table) => {
                if table.is_empty() {
                    return Err(Error::InvalidParameter(
                        "explicit signal table is empty".into(),
                    ));
                }
                for &(n, mu) in table {
                    if n == 0 || !(mu.is_finite() && mu >= 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "explicit signal entry (n={n}, mu={mu}) is invalid"
                        )));
                    }
                }
            }
        }
        Ok(ModelParams { beta, signal })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn signal(&self) -> &SignalSpec {
        &self.signal
    }

    /// Mixture weight `eps_n = n^-beta`, evaluated as `exp(-beta log n)` so
    /// it stays exact in the exponent for n up to the tens of millions.
    pub fn eps(&self, n: u64) -> f64 {
        (-self.beta * (n as f64).ln()).exp()
    }

    /// Signal strength `mu_n` for this scaling.
    pub fn mu(&self, n: u64) -> Result<f64> {
        match &self.signal {
            SignalSpec::SparseR { r } => Ok((2.0 * r * (n as f64).ln()).sqrt()),
            SignalSpec::DensePower { r } => Ok((r * (n as f64).ln()).exp()),
            SignalSpec::Explicit(table) => table
                .iter()
                .find(|&&(m, _)| m == n)
                .map(|&(_, mu)| mu)
                .ok_or(Error::MissingExplicitEntry(n)),
        }
    }

    /// Instantiate the testing problem at sample size n.
    pub fn model(&self, n: u64) -> Result<GaussianModel> {
        GaussianModel::new(n, self.eps(n), self.mu(n)?)
    }
}

/// One testing problem: n i.i.d. samples, mixture weight eps, shift mu.
///
/// `eps` is accepted on the closed interval [0, 1]; the endpoints collapse
/// the alternative onto the null (eps = 0) or onto a pure shifted Gaussian
/// (eps = 1), both useful as degenerate checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModel {
    n: u64,
    eps: f64,
    mu: f64,
    ln_eps: f64,
}

impl GaussianModel {
    pub fn new(n: u64, eps: f64, mu: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidParameter(format!(
                "mixture weight must lie in [0, 1], got {eps}"
            )));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "location shift must be finite and >= 0, got {mu}"
            )));
        }
        Ok(GaussianModel {
            n,
            eps,
            mu,
            ln_eps: eps.ln(),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Chi-squared divergence between signal and noise distributions:
    /// `D^2 = exp(mu^2) - 1`, computed as `expm1` so small shifts keep full
    /// relative accuracy.
    pub fn chi2_divergence(&self) -> f64 {
        (self.mu * self.mu).exp_m1()
    }

    /// Log of the single-sample likelihood ratio: `mu x - mu^2 / 2`.
    pub fn log_likelihood_ratio_single(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFiniteSample { index: 0, value: x });
        }
        Ok(self.mu * x - 0.5 * self.mu * self.mu)
    }

    /// One summand of the log-likelihood ratio, `log(1 - eps + eps L(x))`,
    /// arranged so nothing overflows even when `mu x` reaches several
    /// hundred. Two regimes:
    ///
    /// - `eps L` moderate: `ln1p(eps (L - 1))`, with `eps (L - 1)` built from
    ///   `expm1` for small exponents or as `exp(ln eps + t) - eps` once
    ///   `L - 1` and `L` agree to a ulp;
    /// - `eps L` huge: factor it out, `ln(eps) + t + ln1p((1-eps)/(eps L))`.
    #[inline]
    fn llr_term(&self, x: f64) -> f64 {
        let (eps, mu) = (self.eps, self.mu);
        if eps == 0.0 || mu == 0.0 {
            return 0.0;
        }
        let t = mu * x - 0.5 * mu * mu;
        if eps >= 1.0 {
            return t;
        }
        let s = self.ln_eps + t; // log(eps * L)
        if s > 23.0 {
            // eps * L above ~1e10 dominates the constant term.
            s + ((1.0 - eps) * (-s).exp()).ln_1p()
        } else {
            let u = if t > 36.0 {
                s.exp() - eps
            } else {
                eps * t.exp_m1()
            };
            if u.abs() < 1e-4 {
                // Truncated series; the u^4/4 remainder is below 2.5e-17
                // relative. This is the hot path once eps is small.
                u * (1.0 - u * (0.5 - u / 3.0))
            } else {
                u.ln_1p()
            }
        }
    }

    /// Log-likelihood ratio of a full sample:
    /// `sum_i log(1 - eps + eps L(x_i))`.
    pub fn llr(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() as u64 != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n as usize,
                got: samples.len(),
            });
        }
        let mut acc = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFiniteSample { index: i, value: x });
            }
            acc += self.llr_term(x);
        }
        Ok(acc)
    }

    /// Draw one observation under the given hypothesis. Under the
    /// alternative the Bernoulli contamination label is drawn first, then the
    /// shift is applied to a standard normal.
    #[inline]
    pub fn draw_one<R: Rng>(&self, hyp: Hypothesis, rng: &mut R) -> f64 {
        match hyp {
            Hypothesis::Null => StandardNormal.sample(rng),
            Hypothesis::Alternative => {
                let signal = rng.gen::<f64>() < self.eps;
                let z: f64 = StandardNormal.sample(rng);
                if signal {
                    z + self.mu
                } else {
                    z
                }
            }
        }
    }

    /// Draw `count` i.i.d. observations under the given hypothesis.
    pub fn sample<R: Rng>(&self, hyp: Hypothesis, rng: &mut R, count: usize) -> Vec<f64> {
        let mut out = vec![0.0; count];
        self.sample_into(hyp, rng, &mut out);
        out
    }

    /// Fill `out` with i.i.d. observations under the given hypothesis.
    pub fn sample_into<R: Rng>(&self, hyp: Hypothesis, rng: &mut R, out: &mut [f64]) {
        for slot in out.iter_mut() {
            *slot = self.draw_one(hyp, rng);
        }
    }
}

/// Minimal interface the Monte Carlo estimators need from a testing problem:
/// its sample size, how to draw one n-vector, and the exact log-likelihood
/// ratio used both for the oracle test and for importance weights.
pub trait MixtureModel: Sync {
    fn sample_size(&self) -> usize;

    fn draw_into<R: Rng>(&self, hyp: Hypothesis, rng: &mut R, out: &mut [f64]);

    fn llr(&self, samples: &[f64]) -> Result<f64>;
}

impl MixtureModel for GaussianModel {
    fn sample_size(&self) -> usize {
        self.n as usize
    }

    fn draw_into<R: Rng>(&self, hyp: Hypothesis, rng: &mut R, out: &mut [f64]) {
        self.sample_into(hyp, rng, out)
    }

    fn llr(&self, samples: &[f64]) -> Result<f64> {
        GaussianModel::llr(self, samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{trial_rng, StreamDomain};
    use approx::assert_relative_eq;

    fn model(n: u64, eps: f64, mu: f64) -> GaussianModel {
        GaussianModel::new(n, eps, mu).unwrap()
    }

    #[test]
    fn single_llr_examples() {
        let m = model(1, 0.1, 1.0);
        assert_eq!(m.log_likelihood_ratio_single(0.5).unwrap(), 0.0);
        let m = model(1, 0.1, 0.0);
        assert_eq!(m.log_likelihood_ratio_single(3.7).unwrap(), 0.0);
        let m = model(1, 0.1, 2.0);
        assert_eq!(m.log_likelihood_ratio_single(3.0).unwrap(), 4.0);
        assert!(m.log_likelihood_ratio_single(f64::NAN).is_err());
        assert!(m.log_likelihood_ratio_single(f64::INFINITY).is_err());
    }

    #[test]
    fn llr_trivial_cases() {
        let m = model(3, 0.4, 0.0);
        assert_eq!(m.llr(&[0.3, -2.0, 5.5]).unwrap(), 0.0);
        let m = model(1, 0.5, 1.0);
        assert_eq!(m.llr(&[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn llr_matches_extended_precision_oracle() {
        // log(0.9 + 0.1 e^4) + log(0.9 + 0.1 e^-4), 60-digit reference.
        let m = model(2, 0.1, 2.0);
        assert_relative_eq!(
            m.llr(&[3.0, -1.0]).unwrap(),
            1.7466717767777941,
            max_relative = 1e-14
        );
    }

    #[test]
    fn llr_validates_input() {
        let m = model(2, 0.1, 1.0);
        assert_eq!(
            m.llr(&[1.0]).unwrap_err(),
            Error::LengthMismatch {
                expected: 2,
                got: 1
            }
        );
        assert!(matches!(
            m.llr(&[1.0, f64::NAN]).unwrap_err(),
            Error::NonFiniteSample { index: 1, .. }
        ));
    }

    #[test]
    fn llr_single_consistency_with_single_ratio() {
        // n = 1: llr = log(1 - eps + eps exp(single)).
        let m = model(1, 0.23, 1.7);
        for &x in &[-3.0, -0.5, 0.0, 0.85, 2.0, 7.0, 40.0] {
            let single = m.log_likelihood_ratio_single(x).unwrap();
            let direct = (1.0 - 0.23 + 0.23 * single.exp()).ln();
            let stable = m.llr(&[x]).unwrap();
            assert_relative_eq!(stable, direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn llr_is_overflow_safe() {
        // No infinities or NaNs for |x| <= 200, mu <= 10, eps >= 1e-12.
        for &eps in &[1e-12, 1e-6, 0.01, 0.5, 0.999, 1.0] {
            for &mu in &[1e-8, 0.5, 3.0, 10.0] {
                let m = model(1, eps, mu);
                for i in -200..=200 {
                    let x = i as f64;
                    let v = m.llr(&[x]).unwrap();
                    assert!(v.is_finite(), "eps={eps} mu={mu} x={x} -> {v}");
                }
            }
        }
    }

    #[test]
    fn llr_big_term_agrees_with_log_domain_identity() {
        // mu * x far beyond exp overflow: term must equal
        // log(eps) + t + log1p((1-eps) e^{-log eps - t}).
        let m = model(1, 1e-4, 10.0);
        let x = 100.0; // t = 950
        let t = 10.0 * x - 50.0;
        let expect = 1e-4f64.ln() + t + ((1.0 - 1e-4) * (-(1e-4f64.ln()) - t).exp()).ln_1p();
        assert_relative_eq!(m.llr(&[x]).unwrap(), expect, max_relative = 1e-13);
    }

    #[test]
    fn chi2_divergence_values() {
        assert_eq!(model(1, 0.1, 0.0).chi2_divergence(), 0.0);
        assert_relative_eq!(
            model(1, 0.1, 1.0).chi2_divergence(),
            std::f64::consts::E - 1.0,
            max_relative = 1e-15
        );
        // Series oracle for tiny mu: mu^2 (1 + mu^2/2 + mu^4/6).
        let mu = 1e-8;
        let d2 = model(1, 0.1, mu).chi2_divergence();
        let series = mu * mu * (1.0 + mu * mu / 2.0 + mu.powi(4) / 6.0);
        assert_relative_eq!(d2, series, max_relative = 1e-10);
    }

    #[test]
    fn chi2_divergence_is_monotone_in_mu() {
        let mut last = -1.0;
        for i in 0..60 {
            let mu = i as f64 * 0.1;
            let d2 = model(1, 0.1, mu).chi2_divergence();
            assert!(d2 >= last);
            last = d2;
        }
    }

    #[test]
    fn params_eps_and_mu() {
        let p = ModelParams::new(0.6, SignalSpec::SparseR { r: 0.19 }).unwrap();
        assert_relative_eq!(p.eps(1000), 10f64.powf(-1.8), max_relative = 1e-14);
        assert_relative_eq!(
            p.mu(1000).unwrap(),
            (2.0 * 0.19 * 1000f64.ln()).sqrt(),
            max_relative = 1e-15
        );
        let p = ModelParams::new(0.4, SignalSpec::DensePower { r: 0.0 }).unwrap();
        assert_eq!(p.mu(123456).unwrap(), 1.0);
        let p = ModelParams::new(0.4, SignalSpec::Explicit(vec![(10, 1.0), (100, 1.5)])).unwrap();
        assert_eq!(p.mu(100).unwrap(), 1.5);
        assert_eq!(p.mu(50).unwrap_err(), Error::MissingExplicitEntry(50));
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, SignalSpec::SparseR { r: 0.1 }).is_err());
        assert!(ModelParams::new(1.0, SignalSpec::SparseR { r: 0.1 }).is_err());
        assert!(ModelParams::new(0.5, SignalSpec::SparseR { r: 0.0 }).is_err());
        assert!(ModelParams::new(0.5, SignalSpec::Explicit(vec![])).is_err());
        assert!(GaussianModel::new(0, 0.1, 1.0).is_err());
        assert!(GaussianModel::new(5, -0.1, 1.0).is_err());
        assert!(GaussianModel::new(5, 1.1, 1.0).is_err());
        assert!(GaussianModel::new(5, 0.1, -1.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let m = model(50, 0.3, 2.0);
        let d = StreamDomain::evaluation(Hypothesis::Alternative, 50);
        let a = m.sample(Hypothesis::Alternative, &mut trial_rng(9, d, 3), 50);
        let b = m.sample(Hypothesis::Alternative, &mut trial_rng(9, d, 3), 50);
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_count_zero_gives_empty() {
        let m = model(1, 0.3, 2.0);
        let d = StreamDomain::evaluation(Hypothesis::Null, 1);
        assert!(m
            .sample(Hypothesis::Null, &mut trial_rng(1, d, 0), 0)
            .is_empty());
    }

    #[test]
    fn sampling_pure_signal_has_mean_mu() {
        // eps = 1: every draw is N(mu, 1); CLT tolerance 3/sqrt(N).
        let m = model(1, 1.0, 3.0);
        let d = StreamDomain::evaluation(Hypothesis::Alternative, 1);
        let mut rng = trial_rng(2024, d, 0);
        let nsamp = 1_000_000;
        let xs = m.sample(Hypothesis::Alternative, &mut rng, nsamp);
        let mean = xs.iter().sum::<f64>() / nsamp as f64;
        assert!((mean - 3.0).abs() < 3e-3, "mean = {mean}");
    }

    #[test]
    fn null_samples_have_standard_moments() {
        let m = model(1, 0.3, 2.0);
        let d = StreamDomain::evaluation(Hypothesis::Null, 1);
        let mut rng = trial_rng(15, d, 0);
        let nsamp = 400_000;
        let xs = m.sample(Hypothesis::Null, &mut rng, nsamp);
        let mean = xs.iter().sum::<f64>() / nsamp as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nsamp - 1) as f64;
        assert!(mean.abs() < 3.0 / (nsamp as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 5.0 / (nsamp as f64).sqrt(), "var {var}");
    }

    #[test]
    fn sampling_eps_zero_matches_null_distribution() {
        // Kolmogorov-Smirnov distance between paired-seed null draws and
        // eps = 0 alternative draws stays below 0.01 at 1e5 samples.
        let m = model(1, 0.0, 3.0);
        let nsamp = 100_000;
        let d_null = StreamDomain::evaluation(Hypothesis::Null, 1);
        let d_alt = StreamDomain::evaluation(Hypothesis::Alternative, 1);
        let mut a = m.sample(Hypothesis::Null, &mut trial_rng(5, d_null, 0), nsamp);
        let mut b = m.sample(Hypothesis::Alternative, &mut trial_rng(5, d_alt, 0), nsamp);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let mut ks = 0.0f64;
        let (mut i, mut j) = (0usize, 0usize);
        while i < nsamp && j < nsamp {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let d = (i as f64 - j as f64).abs() / nsamp as f64;
            ks = ks.max(d);
        }
        assert!(ks < 0.01, "KS distance {ks}");
    }
}
