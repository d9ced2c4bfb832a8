//! A discretized mixture model on a finite grid, small enough that error
//! probabilities can be enumerated exactly.
//!
//! The null and alternative densities are evaluated on an equispaced grid and
//! renormalized into probability mass functions. With one or two observations
//! the whole outcome space has at most a few thousand points, so the oracle
//! test's false-alarm and miss probabilities, and the minimum achievable
//! average error over all deterministic tests, are exact sums. This is the
//! ground truth the Monte Carlo estimators are validated against.

use crate::error::{Error, Result};
use crate::models::{Hypothesis, MixtureModel};
use crate::special::std_normal_pdf;
use rand::Rng;

/// Mixture detection problem on a finite grid of support points.
#[derive(Debug, Clone)]
pub struct DiscreteMixtureModel {
    n: usize,
    grid: Vec<f64>,
    null_pmf: Vec<f64>,
    alt_pmf: Vec<f64>,
    null_cdf: Vec<f64>,
    alt_cdf: Vec<f64>,
    log_ratio: Vec<f64>,
}

impl DiscreteMixtureModel {
    /// Discretize the Gaussian location mixture onto `points` equispaced grid
    /// values on [lo, hi]. Weights are the continuous densities at the grid
    /// points, renormalized.
    pub fn gaussian(n: usize, eps: f64, mu: f64, lo: f64, hi: f64, points: usize) -> Result<Self> {
        if n == 0 || points < 2 || lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidParameter(
                "need n >= 1, points >= 2 and lo < hi".into(),
            ));
        }
        if !(0.0..=1.0).contains(&eps) || !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid mixture parameters eps={eps}, mu={mu}"
            )));
        }
        let step = (hi - lo) / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
        let null_w: Vec<f64> = grid.iter().map(|&x| std_normal_pdf(x)).collect();
        let alt_w: Vec<f64> = grid
            .iter()
            .map(|&x| (1.0 - eps) * std_normal_pdf(x) + eps * std_normal_pdf(x - mu))
            .collect();
        Ok(Self::from_weights(n, grid, null_w, alt_w))
    }

    fn from_weights(n: usize, grid: Vec<f64>, null_w: Vec<f64>, alt_w: Vec<f64>) -> Self {
        let s0: f64 = null_w.iter().sum();
        let s1: f64 = alt_w.iter().sum();
        let null_pmf: Vec<f64> = null_w.iter().map(|w| w / s0).collect();
        let alt_pmf: Vec<f64> = alt_w.iter().map(|w| w / s1).collect();
        let cumulate = |pmf: &[f64]| {
            let mut acc = 0.0;
            pmf.iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect::<Vec<f64>>()
        };
        let null_cdf = cumulate(&null_pmf);
        let alt_cdf = cumulate(&alt_pmf);
        let log_ratio = null_pmf
            .iter()
            .zip(&alt_pmf)
            .map(|(&q, &p)| p.ln() - q.ln())
            .collect();
        DiscreteMixtureModel {
            n,
            grid,
            null_pmf,
            alt_pmf,
            null_cdf,
            alt_cdf,
            log_ratio,
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn null_pmf(&self) -> &[f64] {
        &self.null_pmf
    }

    pub fn alt_pmf(&self) -> &[f64] {
        &self.alt_pmf
    }

    fn index_of(&self, x: f64) -> Result<usize> {
        if !x.is_finite() {
            return Err(Error::NonFiniteSample { index: 0, value: x });
        }
        // Samples are always grid values; locate by nearest match.
        let pos = self
            .grid
            .binary_search_by(|g| g.partial_cmp(&x).unwrap())
            .or_else(|ins| {
                let cands = [ins.saturating_sub(1), ins.min(self.grid.len() - 1)];
                let best = cands
                    .iter()
                    .copied()
                    .min_by(|&a, &b| {
                        (self.grid[a] - x)
                            .abs()
                            .partial_cmp(&(self.grid[b] - x).abs())
                            .unwrap()
                    })
                    .unwrap();
                if (self.grid[best] - x).abs() < 1e-9 {
                    Ok(best)
                } else {
                    Err(Error::InvalidParameter(format!(
                        "value {x} is not a grid point"
                    )))
                }
            })?;
        Ok(pos)
    }

    /// Exact joint log-likelihood ratio of an outcome given by grid indices.
    pub fn llr_indices(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.log_ratio[i]).sum()
    }

    /// Exact (P_FA, P_MD) of the test rejecting when LLR >= threshold,
    /// enumerated over the full outcome space. Only practical for n <= 3.
    pub fn enumerate_error_probs(&self, threshold: f64) -> (f64, f64) {
        let k = self.grid.len();
        let mut p_fa = 0.0;
        let mut p_md = 0.0;
        let mut idx = vec![0usize; self.n];
        loop {
            let llr: f64 = self.llr_indices(&idx);
            let q: f64 = idx.iter().map(|&i| self.null_pmf[i]).product();
            let p: f64 = idx.iter().map(|&i| self.alt_pmf[i]).product();
            if llr >= threshold {
                p_fa += q;
            } else {
                p_md += p;
            }
            // advance the multi-index
            let mut pos = 0;
            loop {
                if pos == self.n {
                    return (p_fa, p_md);
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

    /// Minimum achievable (P_FA + P_MD)/2 over all deterministic tests.
    ///
    /// The average error of any test is a sum of independent per-outcome
    /// contributions (the null mass if the outcome rejects, the alternative
    /// mass if it accepts), so the minimum over all 2^(k^n) tests is the sum
    /// of per-outcome minima.
    pub fn min_average_error(&self) -> f64 {
        let k = self.grid.len();
        let mut total = 0.0;
        let mut idx = vec![0usize; self.n];
        loop {
            let q: f64 = idx.iter().map(|&i| self.null_pmf[i]).product();
            let p: f64 = idx.iter().map(|&i| self.alt_pmf[i]).product();
            total += q.min(p);
            let mut pos = 0;
            loop {
                if pos == self.n {
                    return total / 2.0;
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

    fn draw_index<R: Rng>(&self, cdf: &[f64], rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i + 1,
            Err(i) => i,
        }
        .min(cdf.len() - 1)
    }
}

impl MixtureModel for DiscreteMixtureModel {
    fn sample_size(&self) -> usize {
        self.n
    }

    fn draw_into<R: Rng>(&self, hyp: Hypothesis, rng: &mut R, out: &mut [f64]) {
        let cdf = match hyp {
            Hypothesis::Null => &self.null_cdf,
            Hypothesis::Alternative => &self.alt_cdf,
        };
        for slot in out.iter_mut() {
            *slot = self.grid[self.draw_index(cdf, rng)];
        }
    }

    fn llr(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: samples.len(),
            });
        }
        let mut acc = 0.0;
        for &x in samples {
            acc += self.log_ratio[self.index_of(x)?];
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{trial_rng, StreamDomain};

    fn toy(n: usize) -> DiscreteMixtureModel {
        DiscreteMixtureModel::gaussian(n, 0.1, 2.0, -5.0, 5.0, 41).unwrap()
    }

    #[test]
    fn pmfs_normalize() {
        let m = toy(2);
        let s0: f64 = m.null_pmf().iter().sum();
        let s1: f64 = m.alt_pmf().iter().sum();
        assert!((s0 - 1.0).abs() < 1e-12);
        assert!((s1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_splits_total_mass() {
        let m = toy(2);
        let (p_fa, p_md) = m.enumerate_error_probs(0.0);
        assert!(p_fa > 0.0 && p_md > 0.0);
        // Rejection region carries null mass p_fa; acceptance carries
        // alternative mass p_md. Complementary masses must add to one.
        let (p_fa1, p_md1) = m.enumerate_error_probs(f64::NEG_INFINITY);
        assert!((p_fa1 - 1.0).abs() < 1e-12 && p_md1 == 0.0);
    }

    #[test]
    fn oracle_threshold_zero_attains_minimum_average_error() {
        for n in [1usize, 2] {
            let m = toy(n);
            let (p_fa, p_md) = m.enumerate_error_probs(0.0);
            let avg = (p_fa + p_md) / 2.0;
            let min = m.min_average_error();
            assert!(
                (avg - min).abs() <= 1e-14,
                "n={n}: oracle {avg} vs minimum {min}"
            );
        }
    }

    #[test]
    fn sampling_hits_grid_and_llr_round_trips() {
        let m = toy(2);
        let d = StreamDomain::evaluation(Hypothesis::Alternative, 2);
        let mut rng = trial_rng(4, d, 0);
        let mut buf = [0.0; 2];
        for _ in 0..100 {
            m.draw_into(Hypothesis::Alternative, &mut rng, &mut buf);
            let v = MixtureModel::llr(&m, &buf).unwrap();
            assert!(v.is_finite());
        }
    }

    #[test]
    fn empirical_frequencies_match_pmf() {
        let m = toy(1);
        let d = StreamDomain::evaluation(Hypothesis::Null, 1);
        let mut rng = trial_rng(8, d, 0);
        let mut buf = [0.0; 1];
        let trials = 200_000;
        let mut counts = vec![0u64; m.grid().len()];
        for _ in 0..trials {
            m.draw_into(Hypothesis::Null, &mut rng, &mut buf);
            let idx = m.grid().iter().position(|&g| g == buf[0]).unwrap();
            counts[idx] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let p = m.null_pmf()[i];
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            let diff = (c as f64 / trials as f64 - p).abs();
            assert!(diff <= 5.0 * se + 1e-4, "grid point {i}: diff {diff}");
        }
    }
}
