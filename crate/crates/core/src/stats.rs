//! Small goodness-of-fit helpers used by the tests and the acceptance suite.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Standard deviation of a binomial proportion, `sqrt(p (1 - p) / n)`.
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// One-sample Kolmogorov-Smirnov statistic against Uniform(0, 1).
/// Sorts `samples` in place.
pub fn ks_statistic_uniform(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Large-sample KS critical value, `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub critical_value: f64,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self) -> bool {
        self.statistic <= self.critical_value
    }
}

/// Pearson statistic for independent Bernoulli groups: group `i` had
/// `hits[i]` successes out of `trials[i]` with model probability `probs[i]`.
///
/// Groups with a degenerate model probability (0 or 1) contribute no degree
/// of freedom; an observation contradicting them makes the statistic
/// infinite.
pub fn bernoulli_chi_square(hits: &[u64], trials: &[u64], probs: &[f64], alpha: f64) -> ChiSquareTest {
    assert_eq!(hits.len(), trials.len());
    assert_eq!(hits.len(), probs.len());
    let mut statistic = 0.0;
    let mut df = 0usize;
    for ((&h, &n), &p) in hits.iter().zip(trials).zip(probs) {
        let expected = n as f64 * p;
        let observed = h as f64;
        if p <= 0.0 || p >= 1.0 {
            if observed != expected {
                statistic = f64::INFINITY;
            }
            continue;
        }
        // Sum over both cells of (O - E)^2 / E collapses to this form.
        statistic += (observed - expected).powi(2) / (n as f64 * p * (1.0 - p));
        df += 1;
    }
    let (critical_value, p_value) = if df == 0 {
        (0.0, if statistic == 0.0 { 1.0 } else { 0.0 })
    } else {
        let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
        (dist.inverse_cdf(1.0 - alpha), dist.sf(statistic))
    };
    ChiSquareTest {
        statistic,
        degrees_of_freedom: df,
        critical_value,
        p_value,
    }
}
