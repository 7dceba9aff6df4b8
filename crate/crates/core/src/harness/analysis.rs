//! Reward histograms, error-reduction ratios, bootstrap intervals, and the
//! paired t-test used by benchmark reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::stats::reward_stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` fixed-width edges over the observed range.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean: f64,
    pub std: f64,
    /// Expected counts per bin under the fitted normal; empty when `std == 0`.
    pub normal_fit: Vec<f64>,
}

/// Panics on an empty sample or zero bins.
pub fn reward_histogram(rewards: &[f64], bins: usize) -> Histogram {
    assert!(bins >= 1, "need at least one bin");
    let st = reward_stats(rewards);
    let lo = rewards.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = st.max;
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for &r in rewards {
        let i = (((r - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let normal_fit = match Normal::new(st.mean, st.std) {
        Ok(n) if st.std > 0.0 => {
            edges.windows(2).map(|e| rewards.len() as f64 * (n.cdf(e[1]) - n.cdf(e[0]))).collect()
        }
        _ => Vec::new(),
    };
    Histogram { edges, counts, mean: st.mean, std: st.std, normal_fit }
}

/// `(err_base - err_method) / err_base` with `err = 1 - pass rate`. `None`
/// when the baseline makes no errors.
pub fn relative_error_reduction(base_pass: f64, method_pass: f64) -> Option<f64> {
    let (eb, em) = (1.0 - base_pass, 1.0 - method_pass);
    (eb > 0.0).then(|| (eb - em) / eb)
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_mean_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    assert!(!values.is_empty(), "bootstrap needs data");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples.max(1))
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * (means.len() - 1) as f64).round() as usize).min(means.len() - 1)];
    (at(tail), at(1.0 - tail))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    /// Two-sided.
    pub p_value: f64,
}

/// Paired t-test of `a - b`. Needs at least two pairs.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Option<PairedTTest> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        let p = if mean == 0.0 { 1.0 } else { 0.0 };
        return Some(PairedTTest { n, mean_diff: mean, t: mean.signum() * f64::INFINITY, p_value: p });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).ok()?;
    let p_value = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Some(PairedTTest { n, mean_diff: mean, t, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::Distribution;

    #[test]
    fn histogram_examples() {
        let h = reward_histogram(&[0.3; 5], 4);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert!(h.normal_fit.is_empty());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = rand_distr::Normal::new(0.5, 0.1).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        let h = reward_histogram(&xs, 20);
        assert!((h.mean - 0.5).abs() < 0.01);
        assert_eq!(h.counts.iter().sum::<usize>(), 10_000);
        assert_eq!(h.edges.len(), 21);
        let fit: f64 = h.normal_fit.iter().sum();
        assert!((fit - 10_000.0).abs() < 10.0);
    }

    #[test]
    fn error_reduction() {
        assert_eq!(relative_error_reduction(0.5, 0.5), Some(0.0));
        assert_eq!(relative_error_reduction(0.5, 0.75), Some(0.5));
        assert_eq!(relative_error_reduction(1.0, 0.5), None);
    }

    #[test]
    fn t_test_against_hand_computation() {
        // d = (1, 2, 3): mean 2, sd 1, t = 2 / (1 / sqrt 3) = 2 sqrt 3
        let r = paired_t_test(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r.t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        // two-sided p for t = 3.4641 with 2 df is 0.0742
        assert!((r.p_value - 0.0742).abs() < 1e-3, "{}", r.p_value);
        assert!(paired_t_test(&[1.0], &[0.0]).is_none());
    }

    #[test]
    fn bootstrap_covers_the_mean() {
        let xs: Vec<f64> = (0..200).map(|i| (i % 10) as f64).collect();
        let (lo, hi) = bootstrap_mean_ci(&xs, 2000, 0.95, 3);
        assert!(lo < 4.5 && 4.5 < hi);
        assert!(hi - lo < 1.5);
    }
}
