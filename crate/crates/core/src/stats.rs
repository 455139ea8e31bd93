//! Estimator plumbing: sample means with standard errors, batch-means error
//! bars for Monte Carlo estimates, histograms, a one-sample KS test and a
//! chi-square goodness-of-fit test.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n > 1, "need at least two values");
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n > 1);
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)
}

/// Split `values` into `n_batches` contiguous index ranges and return the
/// per-batch results of `stat`, plus the batch-means standard error of the
/// overall statistic. The partition depends only on indices, so estimates
/// are identical under any execution schedule.
pub fn batch_statistic(
    values: &[f64],
    n_batches: usize,
    stat: impl Fn(&[f64]) -> f64,
) -> (Vec<f64>, f64) {
    assert!(n_batches >= 2 && values.len() >= n_batches);
    let n = values.len();
    let per: Vec<f64> = (0..n_batches)
        .map(|b| {
            let lo = b * n / n_batches;
            let hi = (b + 1) * n / n_batches;
            stat(&values[lo..hi])
        })
        .collect();
    let (_, se_of_mean) = mean_and_stderr(&per);
    (per, se_of_mean)
}

/// Fixed-width histogram; values outside `[lo, lo + width * bins)` are
/// dropped and counted in the second return value.
pub fn histogram(values: &[f64], lo: f64, width: f64, bins: usize) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; bins];
    let mut dropped = 0;
    for &v in values {
        let k = (v - lo) / width;
        if k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        } else {
            dropped += 1;
        }
    }
    (counts, dropped)
}

/// Kolmogorov-Smirnov statistic of `samples` against the CDF `cdf`.
/// `samples` need not be sorted.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - f).abs());
    }
    d
}

/// Asymptotic p-value of the one-sample KS statistic `d` at sample size
/// `n`, with the Stephens small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = d * (sqrt_n + 0.12 + 0.11 / sqrt_n);
    kolmogorov_survival(lambda)
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Pearson chi-square test of observed counts against expected counts.
/// Cells are pooled from the right until every expected count reaches
/// `min_expected`. Returns `(statistic, dof, p_value)`.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], min_expected: f64) -> (f64, usize, f64) {
    assert_eq!(observed.len(), expected.len());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        acc_o += o as f64;
        acc_e += e;
        if acc_e >= min_expected {
            cells.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 {
        if let Some(last) = cells.last_mut() {
            last.0 += acc_o;
            last.1 += acc_e;
        } else {
            cells.push((acc_o, acc_e));
        }
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).expect("valid dof");
    (stat, dof, 1.0 - dist.cdf(stat))
}

/// Poisson probability mass function, stable for large means.
pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (kf * lambda.ln() - lambda - statrs::function::gamma::ln_gamma(kf + 1.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_and_stderr_of_constant_shifted() {
        let vals = [1.0, 3.0, 5.0, 7.0];
        let (m, se) = mean_and_stderr(&vals);
        assert_relative_eq!(m, 4.0);
        assert_relative_eq!(se, (20.0f64 / 3.0 / 4.0).sqrt());
    }

    #[test]
    fn ks_accepts_true_uniform_and_rejects_shifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<f64> = (0..20000).map(|_| rng.gen::<f64>()).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert!(ks_pvalue(d, samples.len()) > 0.01);
        let d_bad = ks_statistic(&samples, |x| (x * x).clamp(0.0, 1.0));
        assert!(ks_pvalue(d_bad, samples.len()) < 1e-6);
    }

    #[test]
    fn kolmogorov_survival_reference_values() {
        // Q(0.8) ~ 0.5441, Q(1.36) ~ 0.0491 (classic table entries)
        assert_relative_eq!(kolmogorov_survival(0.8), 0.5441, max_relative = 1e-3);
        assert_relative_eq!(kolmogorov_survival(1.36), 0.0491, max_relative = 2e-2);
    }

    #[test]
    fn chi_square_accepts_poisson_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let lambda = 6.0f64;
        let n = 50000;
        let mut counts = vec![0u64; 30];
        for _ in 0..n {
            // inversion sampling
            let mut k = 0u64;
            let mut p = (-lambda).exp();
            let mut acc = p;
            let u: f64 = rng.gen();
            while u > acc && k < 200 {
                k += 1;
                p *= lambda / k as f64;
                acc += p;
            }
            if (k as usize) < counts.len() {
                counts[k as usize] += 1;
            }
        }
        let expected: Vec<f64> =
            (0..counts.len()).map(|k| n as f64 * poisson_pmf(k as u64, lambda)).collect();
        let (_, _, p) = chi_square_gof(&counts, &expected, 5.0);
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn batch_statistic_partition_is_deterministic() {
        let vals: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let (batches, se) = batch_statistic(&vals, 20, |chunk| {
            chunk.iter().sum::<f64>() / chunk.len() as f64
        });
        assert_eq!(batches.len(), 20);
        assert_relative_eq!(batches[0], 2.0);
        assert!(se > 0.0);
    }
}
