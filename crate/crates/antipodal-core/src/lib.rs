//! Simulation and verification toolkit for the *antipodal* point process on
//! the unit circle.
//!
//! The model places `n` angles `θ_1, …, θ_n` on `(-π, π]` with unnormalized
//! density
//!
//! ```text
//!     w(θ) = ∏_{j<k} |e^{iθ_j} + e^{iθ_k}|^β ,        β > 0,
//! ```
//!
//! i.e. a Gibbs weight that *rewards* pairs of points being close (or exactly
//! antipodal to a reflected copy — hence the name: the interaction kernel
//! `|e^{iθ} + e^{iφ}| = 2|cos((θ-φ)/2)|` vanishes when the two points are
//! antipodal and is maximal when they coincide). At large `n` the process
//! collapses into a single cluster of width `O(n^{-1/2})` around a uniformly
//! random center.
//!
//! The crate provides several *independent* routes to the same quantities so
//! that each can falsify the others:
//!
//! * [`quadrature`] — exact (deterministic) tensor-product quadrature for the
//!   partition function and tilted integrals at small `n`.
//! * [`montecarlo`] — an importance sampler for `log Z_n` that remains
//!   accurate up to `n` in the hundreds, and a box-constrained Gaussian
//!   integral estimator with automatic strategy selection.
//! * [`asymptotics`] — closed-form large-`n` predictions for the same
//!   quantities (partition function, tilted integrals, moment generating
//!   functions, truncated Gaussian integrals).
//! * [`sampler`] — a Metropolis-within-sweep MCMC sampler with a global
//!   rotation move, step-size adaptation during burn-in, and reproducible
//!   parallel replicas.
//! * [`experiments`] — scripted comparisons of estimator vs. prediction that
//!   emit machine-readable reports with explicit pass/fail/inconclusive
//!   verdicts and error bars.
//!
//! Supporting modules: [`model`] (weights, statistics, clustering geometry),
//! [`testfn`] (the test functions `g` used in tilted integrals), [`logval`]
//! (log-domain arithmetic — partition functions here overflow `f64` well
//! before `n = 50`), and [`stats`] (KS distance, autocorrelation, batch
//! means, bootstrap).

pub mod asymptotics;
pub mod error;
pub mod experiments;
pub mod logval;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod sampler;
pub mod stats;
pub mod testfn;

pub use error::{Error, Result};
pub use logval::LogValue;
pub use model::{Configuration, ModelParams};
pub use testfn::TestFunction;
