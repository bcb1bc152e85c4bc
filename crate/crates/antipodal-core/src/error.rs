//! Error type shared across the crate.

/// Crate-wide error enum.
///
/// The variants deliberately mirror how callers need to react:
/// domain errors are caller bugs (bad arguments), resource errors mean the
/// request is valid but too large for the chosen method, degenerate weights
/// signal that a Monte Carlo answer exists but cannot be trusted, and init
/// errors come from the MCMC layer failing to construct a usable start state.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid argument (non-finite input, out-of-range parameter, size
    /// mismatch, unsupported combination).
    #[error("domain error: {0}")]
    Domain(String),

    /// The request would exceed a hard resource bound (grid too large,
    /// sample count out of range).
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Importance weights collapsed onto too few samples to report an
    /// estimate. Carries the realized effective sample size.
    #[error("degenerate importance weights: effective sample size {ess:.2} < {min:.0}")]
    DegenerateWeights { ess: f64, min: f64 },

    /// The sampler could not construct a valid initial state.
    #[error("sampler initialization failed: {0}")]
    SamplerInit(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
