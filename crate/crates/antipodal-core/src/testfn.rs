//! Test functions `g : (-π, π] → ℝ` used to tilt the interaction weight.
//!
//! Two families cover everything the estimators and asymptotic evaluators
//! need: trigonometric polynomials (smooth case) and the Hölder-continuous
//! power family `amplitude · |sin(θ/2)|^{2q}`, whose derivative at 0 fails to
//! be Lipschitz for `q < 1` — the regime where the variance-corrected MGF
//! prediction stops making sense.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `a0 + Σ_k cos_coeffs[k-1]·cos(kθ) + Σ_k sin_coeffs[k-1]·sin(kθ)`.
    Fourier { a0: f64, cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64> },
    /// `amplitude · |sin(θ/2)|^{2q}` with Hölder exponent `q ∈ (0, 1]`.
    HolderPower { q: f64, amplitude: f64 },
}

impl TestFunction {
    /// `g(θ) = cos θ`.
    pub fn cosine() -> Self {
        TestFunction::Fourier { a0: 0.0, cos_coeffs: vec![1.0], sin_coeffs: vec![] }
    }

    /// `g(θ) = sin θ`.
    pub fn sine() -> Self {
        TestFunction::Fourier { a0: 0.0, cos_coeffs: vec![], sin_coeffs: vec![1.0] }
    }

    /// The constant function `g ≡ c`.
    pub fn constant(c: f64) -> Self {
        TestFunction::Fourier { a0: c, cos_coeffs: vec![], sin_coeffs: vec![] }
    }

    /// Checks coefficient finiteness and the Hölder exponent range.
    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::Fourier { a0, cos_coeffs, sin_coeffs } => {
                if !a0.is_finite()
                    || cos_coeffs.iter().any(|c| !c.is_finite())
                    || sin_coeffs.iter().any(|c| !c.is_finite())
                {
                    return Err(Error::domain("Fourier coefficients must be finite"));
                }
                Ok(())
            }
            TestFunction::HolderPower { q, amplitude } => {
                if !(*q > 0.0 && *q <= 1.0) {
                    return Err(Error::domain(format!(
                        "Hölder exponent q must lie in (0, 1], got {q}"
                    )));
                }
                if !amplitude.is_finite() {
                    return Err(Error::domain("HolderPower amplitude must be finite"));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            TestFunction::Fourier { a0, cos_coeffs, sin_coeffs } => {
                let mut v = *a0;
                for (k, a) in cos_coeffs.iter().enumerate() {
                    v += a * ((k + 1) as f64 * theta).cos();
                }
                for (k, b) in sin_coeffs.iter().enumerate() {
                    v += b * ((k + 1) as f64 * theta).sin();
                }
                v
            }
            TestFunction::HolderPower { q, amplitude } => {
                amplitude * (theta / 2.0).sin().abs().powf(2.0 * q)
            }
        }
    }

    /// Pointwise derivative; exact for `Fourier`, the almost-everywhere
    /// derivative for `HolderPower` (0 is returned at the non-differentiable
    /// point θ = 0, a measure-zero convention).
    pub fn derivative(&self, theta: f64) -> f64 {
        match self {
            TestFunction::Fourier { a0: _, cos_coeffs, sin_coeffs } => {
                let mut v = 0.0;
                for (k, a) in cos_coeffs.iter().enumerate() {
                    let k = (k + 1) as f64;
                    v -= a * k * (k * theta).sin();
                }
                for (k, b) in sin_coeffs.iter().enumerate() {
                    let k = (k + 1) as f64;
                    v += b * k * (k * theta).cos();
                }
                v
            }
            TestFunction::HolderPower { q, amplitude } => {
                let s = (theta / 2.0).sin();
                if s == 0.0 {
                    return 0.0;
                }
                // d/dθ |s|^{2q} = q |s|^{2q-1} sign(s) cos(θ/2)
                amplitude * q * s.abs().powf(2.0 * q - 1.0) * s.signum() * (theta / 2.0).cos()
            }
        }
    }

    /// A bound on `sup |g|`: coefficient ℓ¹-norm for Fourier, |amplitude|
    /// for the power family.
    pub fn sup_abs_bound(&self) -> f64 {
        match self {
            TestFunction::Fourier { a0, cos_coeffs, sin_coeffs } => {
                a0.abs()
                    + cos_coeffs.iter().map(|c| c.abs()).sum::<f64>()
                    + sin_coeffs.iter().map(|c| c.abs()).sum::<f64>()
            }
            TestFunction::HolderPower { q: _, amplitude } => amplitude.abs(),
        }
    }

    /// `Some(c)` if the function is identically the constant `c`
    /// (rotation-invariant tilt).
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            TestFunction::Fourier { a0, cos_coeffs, sin_coeffs } => {
                let zero =
                    cos_coeffs.iter().all(|&c| c == 0.0) && sin_coeffs.iter().all(|&c| c == 0.0);
                zero.then_some(*a0)
            }
            TestFunction::HolderPower { q: _, amplitude } => (*amplitude == 0.0).then_some(0.0),
        }
    }

    pub fn is_fourier(&self) -> bool {
        matches!(self, TestFunction::Fourier { .. })
    }
}
