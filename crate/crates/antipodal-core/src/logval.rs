//! Log-domain arithmetic.
//!
//! Partition functions of this model grow like `2^{βn(n-1)/2}`, which leaves
//! `f64` range near `n ≈ 50` already at `β = 1`. Everything that can be large
//! is therefore carried as a natural logarithm, with [`LogValue`] as the thin
//! newtype that keeps log-domain and linear-domain numbers from mixing
//! silently.

use serde::{Deserialize, Serialize};

/// A non-negative real number stored as its natural logarithm.
///
/// `LogValue::zero()` (log = −∞) represents exactly 0. `NaN` logs are
/// rejected at construction; they only ever arise from caller bugs.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogValue {
    ln: f64,
}

impl LogValue {
    /// Wraps a natural logarithm. Panics on NaN (a NaN log never encodes a
    /// meaningful value and would propagate silently through comparisons).
    pub fn from_ln(ln: f64) -> Self {
        assert!(!ln.is_nan(), "LogValue::from_ln(NaN)");
        LogValue { ln }
    }

    /// The value 0 (log = −∞).
    pub fn zero() -> Self {
        LogValue { ln: f64::NEG_INFINITY }
    }

    /// The value 1 (log = 0).
    pub fn one() -> Self {
        LogValue { ln: 0.0 }
    }

    /// Natural logarithm of the stored value.
    pub fn ln(&self) -> f64 {
        self.ln
    }

    /// Linear-domain value; may overflow to `+inf` for large logs.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.ln == f64::NEG_INFINITY
    }
}

impl std::ops::Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        // 0 * x = 0 even when x's log is +inf-free; -inf + finite = -inf is
        // already correct, the only IEEE trap would be -inf + inf.
        if self.is_zero() || rhs.is_zero() {
            return LogValue::zero();
        }
        LogValue::from_ln(self.ln + rhs.ln)
    }
}

impl std::ops::Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        assert!(!rhs.is_zero(), "LogValue division by zero");
        if self.is_zero() {
            return LogValue::zero();
        }
        LogValue::from_ln(self.ln - rhs.ln)
    }
}

impl std::fmt::Display for LogValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exp({})", self.ln)
    }
}

/// `ln Σ e^{x_i}` computed with the usual max-shift; empty input and
/// all-`-inf` input both give `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Streaming accumulator over log-weights.
///
/// Tracks enough state (running max, shifted first and second moments, count)
/// to recover the log-mean, a delta-method standard error for the log-mean,
/// the effective sample size `(Σw)²/Σw²`, and the largest single-weight
/// share — without ever materializing the weights. Shards can be accumulated
/// independently and [`merge`](Self::merge)d deterministically.
#[derive(Clone, Copy, Debug)]
pub struct LogWeightStats {
    max: f64,
    /// Σ exp(x_i - max)
    s1: f64,
    /// Σ exp(2 (x_i - max))
    s2: f64,
    count: u64,
}

impl Default for LogWeightStats {
    fn default() -> Self {
        Self::new()
    }
}

impl LogWeightStats {
    pub fn new() -> Self {
        LogWeightStats { max: f64::NEG_INFINITY, s1: 0.0, s2: 0.0, count: 0 }
    }

    /// Adds one log-weight. `-inf` (an exactly-zero weight) is counted but
    /// contributes nothing to the sums.
    pub fn push(&mut self, lw: f64) {
        assert!(!lw.is_nan(), "log-weight is NaN");
        self.count += 1;
        if lw == f64::NEG_INFINITY {
            return;
        }
        if lw > self.max {
            let shift = if self.max == f64::NEG_INFINITY { 0.0 } else { (self.max - lw).exp() };
            self.s1 = self.s1 * shift + 1.0;
            self.s2 = self.s2 * shift * shift + 1.0;
            self.max = lw;
        } else {
            let e = (lw - self.max).exp();
            self.s1 += e;
            self.s2 += e * e;
        }
    }

    /// Combines two accumulators; equivalent to having pushed both streams
    /// into one (up to floating-point reassociation).
    pub fn merge(&mut self, other: &LogWeightStats) {
        self.count += other.count;
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max > self.max {
            let shift =
                if self.max == f64::NEG_INFINITY { 0.0 } else { (self.max - other.max).exp() };
            self.s1 = self.s1 * shift + other.s1;
            self.s2 = self.s2 * shift * shift + other.s2;
            self.max = other.max;
        } else {
            let shift = (other.max - self.max).exp();
            self.s1 += other.s1 * shift;
            self.s2 += other.s2 * shift * shift;
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `ln Σ w_i`.
    pub fn log_sum(&self) -> f64 {
        if self.s1 == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.max + self.s1.ln()
    }

    /// `ln ( (1/N) Σ w_i )`.
    pub fn log_mean(&self) -> f64 {
        assert!(self.count > 0, "log_mean of empty accumulator");
        self.log_sum() - (self.count as f64).ln()
    }

    /// Effective sample size `(Σw)² / Σw²`.
    pub fn ess(&self) -> f64 {
        if self.s2 == 0.0 {
            return 0.0;
        }
        self.s1 * self.s1 / self.s2
    }

    /// Delta-method standard error of `log_mean`:
    /// `Var(ln Ŵ) ≈ Var(Ŵ)/Ŵ² = Σw²/(Σw)² − 1/N` (sampling view).
    pub fn se_of_log_mean(&self) -> f64 {
        if self.s1 == 0.0 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        (self.s2 / (self.s1 * self.s1) - 1.0 / n).max(0.0).sqrt()
    }

    /// Fraction of the total weight carried by the single largest weight.
    pub fn max_weight_share(&self) -> f64 {
        if self.s1 == 0.0 {
            return 0.0;
        }
        1.0 / self.s1
    }
}

/// Compensated (Kahan) summation; the tensor-product quadratures accumulate
/// up to ~2^33 terms, where naive summation loses 3–4 digits.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum { sum: 0.0, c: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}
