//! The model itself: parameters, configurations, the interaction weight, and
//! the clustering geometry.

use crate::error::{Error, Result};
use crate::logval::LogValue;
use crate::testfn::TestFunction;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Model parameters: number of points `n ≥ 1` and inverse-temperature-like
/// exponent `β > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: usize,
    beta: f64,
}

impl ModelParams {
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::domain(format!("beta must be finite and positive, got {beta}")));
        }
        Ok(ModelParams { n, beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Number of interacting pairs, `n(n-1)/2`.
    pub fn pair_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }
}

/// Wraps an angle to the half-open interval `(-π, π]`.
///
/// The boundary convention matters: `-π` maps to `+π`, so every physical
/// point has exactly one representative.
pub fn wrap_angle(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("cannot wrap non-finite angle {x}")));
    }
    Ok(wrap_fast(x))
}

/// Same mapping as [`wrap_angle`] without the finiteness check; for hot loops
/// that have already validated their inputs.
#[inline]
pub(crate) fn wrap_fast(x: f64) -> f64 {
    let mut y = x.rem_euclid(TWO_PI); // [0, 2π)
    if y > PI {
        y -= TWO_PI;
    }
    y // (-π, π]
}

/// A point configuration: `n ≥ 1` angles, each stored wrapped to `(-π, π]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    angles: Vec<f64>,
}

impl Configuration {
    /// Builds a configuration, wrapping every angle. Rejects empty input and
    /// non-finite entries.
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::domain("configuration must contain at least one point"));
        }
        let mut wrapped = angles;
        for a in wrapped.iter_mut() {
            *a = wrap_angle(*a)?;
        }
        Ok(Configuration { angles: wrapped })
    }

    /// Internal constructor for angles already known to be wrapped.
    pub(crate) fn from_wrapped(angles: Vec<f64>) -> Self {
        debug_assert!(angles.iter().all(|&a| a > -PI && a <= PI));
        Configuration { angles }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees n ≥ 1
    }
}

/// Log of the pair-interaction kernel `|e^{iθ} + e^{iφ}|^β = (2|cos((θ-φ)/2)|)^β`
/// for a single pair; `-inf` when the pair is exactly antipodal.
#[inline]
pub(crate) fn pair_log_kernel(delta: f64, beta: f64) -> f64 {
    let c = (delta / 2.0).cos().abs();
    // `cos` never returns exact 0.0 in floating point, so pairs within a few
    // ulps of antipodal are snapped to weight zero. The snapped factor would
    // be ≤ 2e-15 anyway, far below every tolerance used in this crate.
    if c < 1e-15 {
        return f64::NEG_INFINITY;
    }
    beta * (2.0 * c).ln()
}

/// Unnormalized Gibbs weight `∏_{j<k} |e^{iθ_j} + e^{iθ_k}|^β` in log domain.
///
/// Exactly antipodal pairs give a genuine zero, reported as
/// `LogValue::zero()`, not an error. A length mismatch between the
/// configuration and `params.n` is a domain error.
pub fn log_weight(config: &Configuration, params: &ModelParams) -> Result<LogValue> {
    if config.len() != params.n() {
        return Err(Error::domain(format!(
            "configuration has {} points but params.n = {}",
            config.len(),
            params.n()
        )));
    }
    let th = config.angles();
    let beta = params.beta();
    let mut total = 0.0;
    for j in 0..th.len() {
        for k in (j + 1)..th.len() {
            let lw = pair_log_kernel(th[j] - th[k], beta);
            if lw == f64::NEG_INFINITY {
                return Ok(LogValue::zero());
            }
            total += lw;
        }
    }
    Ok(LogValue::from_ln(total))
}

/// Linear statistic `Σ_j g(θ_j)`.
pub fn linear_statistic(config: &Configuration, g: &TestFunction) -> f64 {
    config.angles().iter().map(|&th| g.eval(th)).sum()
}

/// A closed arc on the circle, described by its center angle (wrapped to
/// `(-π, π]`) and half-width in radians (`0 ≤ half_width ≤ π`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub center: f64,
    pub half_width: f64,
}

impl Arc {
    /// Whether `theta` lies within the arc, up to `tol` of angular slack.
    pub fn contains(&self, theta: f64, tol: f64) -> bool {
        circular_distance(theta, self.center) <= self.half_width + tol
    }
}

/// Angular distance on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_fast(a - b).abs()
}

/// Smallest closed arc containing all points of the configuration.
///
/// Computed from the largest gap between circularly sorted neighbors: the
/// minimal enclosing arc is the complement of the largest gap. When several
/// gaps tie exactly, the arc with the smallest wrapped center is returned so
/// the result is a deterministic function of the point set.
pub fn min_enclosing_arc(config: &Configuration) -> Arc {
    let mut th: Vec<f64> = config.angles().to_vec();
    th.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = th.len();
    if n == 1 {
        return Arc { center: th[0], half_width: 0.0 };
    }
    // Gap i runs forward from th[i] to its circular successor.
    let mut best: Option<(f64, f64)> = None; // (gap, wrapped center of the complement arc)
    for i in 0..n {
        let next = if i + 1 == n { th[0] + TWO_PI } else { th[i + 1] };
        let gap = next - th[i];
        let half_width = (TWO_PI - gap) / 2.0;
        let center = wrap_fast(next + half_width);
        match best {
            None => best = Some((gap, center)),
            Some((g, c)) => {
                if gap > g || (gap == g && center < c) {
                    best = Some((gap, center));
                }
            }
        }
    }
    let (gap, center) = best.unwrap();
    Arc { center, half_width: (TWO_PI - gap) / 2.0 }
}

/// Whether every point lies within straight-line (chord) distance `radius`
/// of some common point on the unit circle.
///
/// Chord distance `|e^{iθ} - e^{ic}| = 2|sin((θ-c)/2)| ≤ radius` is an
/// angular condition `|θ - c| ≤ 2 arcsin(radius/2)`, so the test reduces to
/// comparing the minimal enclosing arc's half-width against that threshold.
/// `radius` must lie in `(0, 2]`; at `radius = 2` every configuration is
/// clustered (no two points on the circle are further than a diameter apart).
pub fn is_clustered(config: &Configuration, radius: f64) -> Result<bool> {
    if !(radius.is_finite() && radius > 0.0 && radius <= 2.0) {
        return Err(Error::domain(format!("chord radius must lie in (0, 2], got {radius}")));
    }
    let threshold = 2.0 * (radius / 2.0).asin();
    Ok(min_enclosing_arc(config).half_width <= threshold)
}

/// Coefficients of the small-angle expansion of the pair log-kernel:
///
/// `β ln(2|cos(x/2)|) = β ln 2 + c2 x² + c4 x⁴ + O(x⁶)` with
/// `c2 = -β/8`, `c4 = -β/192`.
pub fn taylor_interaction_coeffs(beta: f64) -> Result<(f64, f64)> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::domain(format!("beta must be finite and positive, got {beta}")));
    }
    Ok((-beta / 8.0, -beta / 192.0))
}
