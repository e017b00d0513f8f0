//! Batch-means error bars.

use serde::{Deserialize, Serialize};

/// Number of consecutive batches used for every batch-means error bar.
pub const BATCHES: usize = 100;

/// A point estimate with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    /// Number of samples behind `value`.
    pub n: u64,
}

impl EstimateWithError {
    pub fn exact(value: f64, n: u64) -> Self {
        Self { value, std_error: 0.0, n }
    }

    /// Ratio estimate from per-batch `(numerator, denominator)` sums.
    ///
    /// The value is the pooled ratio; the standard error is the sample
    /// standard deviation of the per-batch ratios over √(batches). Batches
    /// with a zero denominator are skipped. Fewer than two usable batches
    /// give a NaN error.
    pub fn from_batches(batches: &[(f64, f64)]) -> Self {
        let (num, den) = batches
            .iter()
            .fold((0.0, 0.0), |(n, d), &(bn, bd)| (n + bn, d + bd));
        let means: Vec<f64> = batches
            .iter()
            .filter(|(_, d)| *d > 0.0)
            .map(|(n, d)| n / d)
            .collect();
        let value = if den > 0.0 { num / den } else { f64::NAN };
        Self { value, std_error: std_error_of_mean(&means), n: den as u64 }
    }
}

/// Sample standard deviation of `xs` divided by √len.
pub fn std_error_of_mean(xs: &[f64]) -> f64 {
    let k = xs.len();
    if k < 2 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / k as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
    (var / k as f64).sqrt()
}

/// Batch holding sample `i` of `len` when split into `batches` consecutive runs.
pub fn batch_of(i: u64, len: u64, batches: usize) -> usize {
    ((i as u128 * batches as u128) / len as u128) as usize
}
