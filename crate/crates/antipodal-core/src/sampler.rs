//! Metropolis MCMC for the antipodal process.
//!
//! One *sweep* = `n` single-site Metropolis proposals (wrapped-Gaussian step
//! of scale `step_scale`) followed by one global rotation move, which is
//! always accepted because the weight is rotation-invariant. The rotation
//! move matters more than it looks: it makes the cluster center of each
//! retained sample an independent uniform draw, so replica averages of
//! center-dependent statistics decorrelate after a single sweep.
//!
//! `step_scale` adapts by Robbins–Monro during burn-in only and is frozen
//! afterwards, keeping the sampling phase a genuine Markov chain with the
//! correct stationary law.

use crate::error::{Error, Result};
use crate::model::{log_weight, pair_log_kernel, wrap_fast, Configuration, ModelParams};
use crate::stats::integrated_autocorr_time;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// RNG stream namespace for chains; disjoint from the Monte Carlo shard
/// streams so a shared seed across estimators never reuses a stream.
const CHAIN_STREAM_BASE: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitStrategy {
    /// All points at a uniformly random center plus jitter of one step
    /// scale — starts inside the stationary cluster shape.
    ClusterAtUniform,
    /// Independent uniform angles; far from stationarity for large `βn`,
    /// useful for burn-in studies.
    UniformIid,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub params: ModelParams,
    /// Post-burn-in sweeps.
    pub sweeps: usize,
    /// Burn-in sweeps (with step-size adaptation).
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in sweep.
    pub thin: usize,
    pub replicas: usize,
    pub seed: u64,
    pub init: InitStrategy,
    /// Initial proposal standard deviation; `None` → `2/√(βn)`, the
    /// stationary cluster width.
    pub step_scale: Option<f64>,
    /// Robbins–Monro target for the site-move acceptance rate.
    pub target_acceptance: f64,
}

impl SamplerConfig {
    pub fn new(params: ModelParams) -> Self {
        SamplerConfig {
            params,
            sweeps: 1000,
            burn_in: 200,
            thin: 1,
            replicas: 1,
            seed: 1,
            init: InitStrategy::ClusterAtUniform,
            step_scale: None,
            target_acceptance: 0.3,
        }
    }

    pub fn initial_step_scale(&self) -> f64 {
        self.step_scale
            .unwrap_or_else(|| 2.0 / (self.params.beta() * self.params.n() as f64).sqrt())
    }

    fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::domain("sweeps must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::domain("thin must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(Error::domain("replicas must be at least 1"));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::domain(format!(
                "target_acceptance must lie in (0,1), got {}",
                self.target_acceptance
            )));
        }
        if let Some(s) = self.step_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::domain(format!("step_scale must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// Site-move acceptance fraction over the sampling phase.
    pub acceptance_rate: f64,
    /// Integrated autocorrelation time of `cos θ_1` over retained samples.
    pub integrated_autocorr_time: f64,
    /// Effective number of retained samples for that statistic.
    pub effective_sample_size: f64,
    /// Step scale after burn-in adaptation (frozen during sampling).
    pub final_step_scale: f64,
}

#[derive(Clone, Debug)]
pub struct ChainRun {
    pub samples: Vec<Configuration>,
    pub diagnostics: ChainDiagnostics,
}

/// Log-weight change from replacing `angles[site]` with `proposal`,
/// computed incrementally in `O(n)`. `-inf` when the proposal creates an
/// exactly antipodal pair.
pub fn site_log_weight_delta(angles: &[f64], site: usize, proposal: f64, beta: f64) -> f64 {
    let old = angles[site];
    let mut delta = 0.0;
    for (k, &other) in angles.iter().enumerate() {
        if k == site {
            continue;
        }
        let new_term = pair_log_kernel(proposal - other, beta);
        if new_term == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        delta += new_term - pair_log_kernel(old - other, beta);
    }
    delta
}

/// One systematic sweep of single-site proposals; returns accepted count.
fn sweep(angles: &mut [f64], rng: &mut ChaCha8Rng, step: f64, beta: f64) -> usize {
    let n = angles.len();
    let mut accepted = 0;
    for site in 0..n {
        let xi: f64 = rng.sample(StandardNormal);
        let proposal = wrap_fast(angles[site] + step * xi);
        let delta = site_log_weight_delta(angles, site, proposal, beta);
        let accept = if delta >= 0.0 {
            rng.gen::<f64>(); // keep the draw count fixed for determinism
            true
        } else {
            let u: f64 = rng.gen();
            u.ln() < delta
        };
        if accept {
            angles[site] = proposal;
            accepted += 1;
        }
    }
    accepted
}

/// Global rotation: adds a uniform angle to every point. Always accepted
/// (the weight is rotation-invariant).
fn rotation_move(angles: &mut [f64], rng: &mut ChaCha8Rng) {
    let shift = rng.gen_range(-PI..PI);
    for a in angles.iter_mut() {
        *a = wrap_fast(*a + shift);
    }
}

fn run_single(cfg: &SamplerConfig, replica: usize) -> Result<ChainRun> {
    let n = cfg.params.n();
    let beta = cfg.params.beta();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(CHAIN_STREAM_BASE + replica as u64);

    let mut step = cfg.initial_step_scale();
    let mut angles = match cfg.init {
        InitStrategy::ClusterAtUniform => {
            let center = rng.gen_range(-PI..PI);
            (0..n)
                .map(|_| {
                    let xi: f64 = rng.sample(StandardNormal);
                    wrap_fast(center + step * xi)
                })
                .collect::<Vec<f64>>()
        }
        InitStrategy::UniformIid => (0..n).map(|_| rng.gen_range(-PI..PI)).collect(),
    };
    let init_config = Configuration::from_wrapped(angles.clone());
    if log_weight(&init_config, &cfg.params)?.is_zero() {
        return Err(Error::SamplerInit(
            "initial configuration has zero weight (exactly antipodal pair)".into(),
        ));
    }

    // burn-in with Robbins–Monro adaptation of ln(step)
    for sweep_idx in 0..cfg.burn_in {
        let accepted = sweep(&mut angles, &mut rng, step, beta);
        rotation_move(&mut angles, &mut rng);
        let rate = accepted as f64 / n as f64;
        let gain = 1.0 / (1.0 + sweep_idx as f64).powf(0.6);
        step = (step.ln() + gain * (rate - cfg.target_acceptance)).exp().clamp(1e-4, PI);
    }
    let frozen_step = step;

    // sampling phase: step scale frozen
    let retained = cfg.sweeps / cfg.thin;
    let mut samples = Vec::with_capacity(retained);
    let mut stat_series = Vec::with_capacity(retained);
    let mut accepted_total = 0usize;
    for sweep_idx in 1..=cfg.sweeps {
        accepted_total += sweep(&mut angles, &mut rng, frozen_step, beta);
        rotation_move(&mut angles, &mut rng);
        if sweep_idx % cfg.thin == 0 {
            samples.push(Configuration::from_wrapped(angles.clone()));
            stat_series.push(angles[0].cos());
        }
    }
    let acceptance_rate = accepted_total as f64 / (cfg.sweeps * n) as f64;
    let (tau, ess) = if stat_series.is_empty() {
        (1.0, 0.0)
    } else {
        integrated_autocorr_time(&stat_series)
    };
    Ok(ChainRun {
        samples,
        diagnostics: ChainDiagnostics {
            acceptance_rate,
            integrated_autocorr_time: tau,
            effective_sample_size: ess,
            final_step_scale: frozen_step,
        },
    })
}

/// Runs a single chain (replica index 0).
pub fn run_chain(cfg: &SamplerConfig) -> Result<ChainRun> {
    cfg.validate()?;
    run_single(cfg, 0)
}

/// Runs `cfg.replicas` independent chains in parallel. Replica `r` draws
/// from RNG stream `r` of `cfg.seed`, so results are bit-identical across
/// thread counts and repeat runs.
pub fn run_replicas(cfg: &SamplerConfig) -> Result<Vec<ChainRun>> {
    cfg.validate()?;
    (0..cfg.replicas).into_par_iter().map(|r| run_single(cfg, r)).collect()
}
