//! Statistical utilities: error bars, autocorrelation, KS distance,
//! bootstrap. Hand-rolled on purpose — these are the instruments the
//! verification experiments rely on, so they carry their own oracle tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// How a standard error was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorMethod {
    /// Batch means over a single correlated series.
    BatchMeans,
    /// Spread of independent replica means.
    ReplicaSpread,
    /// Binomial-style spread of per-replica proportions.
    BinomialReplicas,
    /// Delta method on a log-domain mean of weights.
    DeltaMethodLog,
    /// Percentile bootstrap.
    BootstrapPercentile,
}

/// A scalar estimate with an explicit uncertainty and its provenance.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    /// Number of raw observations behind the estimate.
    pub count: u64,
    pub method: ErrorMethod,
}

pub fn mean(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two observations.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean and batch-means standard error for a (possibly autocorrelated)
/// series: `⌊√N⌋` batches of equal length, SE = sd(batch means)/√(batches).
/// Falls back to the iid formula when the series is too short to batch.
pub fn mean_with_batch_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n > 0, "empty series");
    let m = mean(xs);
    let n_batches = (n as f64).sqrt().floor() as usize;
    if n_batches < 2 {
        return (m, (sample_variance(xs) / n as f64).sqrt());
    }
    let batch_len = n / n_batches;
    let batch_means: Vec<f64> =
        (0..n_batches).map(|b| mean(&xs[b * batch_len..(b + 1) * batch_len])).collect();
    let se = (sample_variance(&batch_means) / n_batches as f64).sqrt();
    (m, se)
}

/// Integrated autocorrelation time and effective sample size via Geyer's
/// initial-positive-sequence estimator: sum autocovariance pairs
/// `Γ_m = γ_{2m} + γ_{2m+1}` while they stay positive,
/// `τ = −1 + 2 ΣΓ_m / γ_0`, `ESS = N/τ`.
///
/// A constant series (or one too short to estimate) reports `τ = 1`.
pub fn integrated_autocorr_time(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n < 4 {
        return (1.0, n as f64);
    }
    let m = mean(xs);
    let gamma = |k: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..(n - k) {
            s += (xs[i] - m) * (xs[i + k] - m);
        }
        s / n as f64
    };
    let g0 = gamma(0);
    if g0 <= 0.0 {
        return (1.0, n as f64);
    }
    let mut sum_pairs = 0.0;
    let max_pair = n / 2 - 1;
    for pair in 0..max_pair {
        let big_gamma = gamma(2 * pair) + gamma(2 * pair + 1);
        if big_gamma <= 0.0 {
            break;
        }
        sum_pairs += big_gamma;
    }
    let tau = (2.0 * sum_pairs / g0 - 1.0).max(1e-3);
    (tau, n as f64 / tau)
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against the given
/// CDF: `D = sup_x |F_emp(x) − F(x)|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty(), "KS of empty sample");
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Result of a percentile bootstrap: central 95% interval plus the bootstrap
/// standard error.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub lo: f64,
    pub hi: f64,
    pub se: f64,
}

/// Percentile bootstrap over item indices `0..n_items`: `stat` receives a
/// resampled index multiset and returns the statistic. Deterministic given
/// the RNG state.
pub fn bootstrap_ci(
    n_items: usize,
    n_boot: usize,
    rng: &mut impl Rng,
    mut stat: impl FnMut(&[usize]) -> f64,
) -> BootstrapCi {
    assert!(n_items > 1, "bootstrap needs at least two items");
    assert!(n_boot >= 100, "bootstrap needs at least 100 resamples");
    let mut stats = Vec::with_capacity(n_boot);
    let mut idx = vec![0usize; n_items];
    for _ in 0..n_boot {
        for slot in idx.iter_mut() {
            *slot = rng.gen_range(0..n_items);
        }
        stats.push(stat(&idx));
    }
    let se = sample_variance(&stats).sqrt();
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| -> f64 {
        let pos = (p * (n_boot - 1) as f64).round() as usize;
        stats[pos.min(n_boot - 1)]
    };
    BootstrapCi { lo: q(0.025), hi: q(0.975), se }
}
