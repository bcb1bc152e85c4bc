//! Browser bindings for the antipodal circular ensemble demo page.
//!
//! Three operations are exported:
//! * [`ChainDemo`] — an interactive single-site Metropolis chain over the
//!   ensemble, stepped a few sweeps per animation frame;
//! * [`mgf_curves`] — closed-form log-MGF predictions for the cosine
//!   statistic under both tilt scalings, as plot-ready JSON arrays;
//! * [`log_zn_comparison`] — exact small-`n` partition integrals next to
//!   the closed-form large-`n` prediction.
//!
//! Everything here runs sequentially: the only core paths used are the
//! pairwise weight kernel, the rotation-reduced quadrature, and the pure
//! closed-form predictions — none of which touch a thread pool, so the
//! module works on `wasm32-unknown-unknown` without worker shims.
//!
//! Inputs are clamped to demo-safe ranges rather than rejected; this is a
//! visualization aid, not a measurement tool (use the `antipodal` CLI for
//! that).

use antipodal_core::asymptotics::{
    predict_log_zn, predict_mgf_conjecture, predict_mgf_leading, predict_mgf_sqrt_leading,
    predict_log_tilted,
};
use antipodal_core::model::{
    is_clustered, log_weight, min_enclosing_arc, wrap_angle, Configuration, ModelParams,
};
use antipodal_core::quadrature::{exact_log_integral, QuadratureSpec, Scaling};
use antipodal_core::sampler::site_log_weight_delta;
use antipodal_core::testfn::TestFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use wasm_bindgen::prelude::*;

fn clamp_n(n: usize) -> usize {
    n.clamp(1, 128)
}

fn clamp_beta(beta: f64) -> f64 {
    if beta.is_finite() {
        beta.clamp(0.0, 16.0)
    } else {
        2.0
    }
}

/// Interactive Metropolis chain for the ensemble with pair weight
/// `|e^{iθ_j}+e^{iθ_k}|^β`.
///
/// Starts from independent uniform angles so the collapse into a single
/// cluster is visible. The proposal width self-tunes toward a 30%
/// acceptance rate with a slowly decaying adaptation rate — good enough
/// for animation; the measurement-grade sampler in the core crate freezes
/// its step size after burn-in instead.
#[wasm_bindgen]
pub struct ChainDemo {
    angles: Vec<f64>,
    beta: f64,
    rng: ChaCha8Rng,
    step_scale: f64,
    sweeps_done: u64,
    recent_accepted: u64,
    recent_proposed: u64,
}

#[wasm_bindgen]
impl ChainDemo {
    /// `n` is clamped to `1..=128`, `beta` to `0..=16`.
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, beta: f64, seed: u64) -> ChainDemo {
        let n = clamp_n(n);
        let beta = clamp_beta(beta);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angles: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..=PI)).collect();
        // start near the stationary cluster width 2/√(βn), capped for tiny βn
        let step_scale = (2.0 / (beta * n as f64).sqrt().max(1e-9)).min(PI / 2.0);
        ChainDemo {
            angles,
            beta,
            rng,
            step_scale,
            sweeps_done: 0,
            recent_accepted: 0,
            recent_proposed: 0,
        }
    }

    /// Advance `sweeps` full sweeps (one proposed move per site each) and
    /// return the new state as JSON.
    pub fn step(&mut self, sweeps: u32) -> String {
        let n = self.angles.len();
        for _ in 0..sweeps {
            let mut accepted = 0u64;
            for site in 0..n {
                let noise: f64 = self.rng.sample(StandardNormal);
                let proposal = wrap_fallible(self.angles[site] + self.step_scale * noise);
                let delta = site_log_weight_delta(&self.angles, site, proposal, self.beta);
                let u: f64 = self.rng.gen_range(0.0..1.0);
                if delta >= 0.0 || u.ln() < delta {
                    self.angles[site] = proposal;
                    accepted += 1;
                }
            }
            self.sweeps_done += 1;
            self.recent_accepted += accepted;
            self.recent_proposed += n as u64;
            // multiplicative stochastic-approximation update toward 30%
            let rate = accepted as f64 / n as f64;
            let gain = 1.0 / (10.0 + self.sweeps_done as f64).sqrt();
            self.step_scale = (self.step_scale * ((rate - 0.3) * gain).exp()).clamp(1e-4, PI);
            // keep the acceptance readout a ~50-sweep sliding window
            if self.recent_proposed > 50 * n as u64 {
                self.recent_accepted /= 2;
                self.recent_proposed /= 2;
            }
        }
        self.state()
    }

    /// Current state as JSON without advancing the chain.
    pub fn state(&self) -> String {
        let config = Configuration::new(self.angles.clone()).expect("angles stay wrapped");
        let params = ModelParams::new(self.angles.len(), self.beta)
            .or_else(|_| ModelParams::new(self.angles.len(), 0.0))
            .expect("clamped parameters are valid");
        let arc = min_enclosing_arc(&config);
        let n = self.angles.len() as f64;
        // chord radius n^(ε-1/2) with ε = 0.1: the shrinking-arc scale whose
        // covering probability the clustering suite tracks
        let radius = n.powf(-0.4).min(2.0);
        let clustered = is_clustered(&config, radius).unwrap_or(false);
        let acceptance = if self.recent_proposed == 0 {
            0.0
        } else {
            self.recent_accepted as f64 / self.recent_proposed as f64
        };
        let lw = log_weight(&config, &params).map(|v| v.ln()).unwrap_or(f64::NEG_INFINITY);
        serde_json::json!({
            "n": self.angles.len(),
            "beta": self.beta,
            "sweeps_done": self.sweeps_done,
            "angles": self.angles,
            "acceptance_rate": acceptance,
            "step_scale": self.step_scale,
            "log_weight": if lw.is_finite() { serde_json::json!(lw) } else { serde_json::json!(null) },
            "arc": { "center": arc.center, "half_width": arc.half_width },
            "cluster_radius": radius,
            "clustered": clustered,
        })
        .to_string()
    }
}

fn wrap_fallible(x: f64) -> f64 {
    wrap_angle(x).unwrap_or(0.0)
}

/// Closed-form log-MGF predictions for the statistic `Σ_j cos θ_j`, sampled
/// on a symmetric grid of `points` tilt values `t ∈ [-t_max, t_max]`.
///
/// Returns JSON arrays:
/// * `log_leading` — the `t/n`-scaling limit `ln (1/2π)∫ e^{t cos u} du`
///   (independent of `n`);
/// * `log_sqrt_plain` — the derivative-free reference under `t/√n` scaling
///   at the given `n`;
/// * `log_sqrt_corrected` — the variance-corrected form under `t/√n`
///   scaling at the given `n`.
#[wasm_bindgen]
pub fn mgf_curves(beta: f64, n: usize, t_max: f64, points: usize) -> String {
    let beta = clamp_beta(beta).max(0.05);
    let n = clamp_n(n);
    let t_max = if t_max.is_finite() { t_max.abs().clamp(0.05, 3.0) } else { 1.0 };
    let points = points.clamp(3, 512);
    let g = TestFunction::cosine();
    let params = ModelParams::new(n, beta).expect("clamped parameters are valid");

    let mut ts = Vec::with_capacity(points);
    let mut leading = Vec::with_capacity(points);
    let mut sqrt_plain = Vec::with_capacity(points);
    let mut sqrt_corrected = Vec::with_capacity(points);
    for i in 0..points {
        let t = -t_max + 2.0 * t_max * (i as f64) / ((points - 1) as f64);
        ts.push(t);
        leading.push(predict_mgf_leading(&g, t).map(|v| v.ln()).unwrap_or(f64::NAN));
        sqrt_plain.push(
            predict_mgf_sqrt_leading(&params, &g, t).map(|v| v.ln()).unwrap_or(f64::NAN),
        );
        sqrt_corrected.push(
            predict_mgf_conjecture(&params, &g, t).map(|v| v.ln()).unwrap_or(f64::NAN),
        );
    }
    serde_json::json!({
        "beta": beta,
        "n": n,
        "t": ts,
        "log_leading": leading,
        "log_sqrt_plain": sqrt_plain,
        "log_sqrt_corrected": sqrt_corrected,
    })
    .to_string()
}

/// Exact (quadrature) values of the raw partition integral
/// `∫ ∏_{j<k} |e^{iθ_j}+e^{iθ_k}|^β dθ` for `n ≤ 5`, next to the
/// closed-form large-`n` prediction, as JSON rows
/// `{n, exact, predicted, log_ratio}`.
#[wasm_bindgen]
pub fn log_zn_comparison(beta: f64, n_max: usize) -> String {
    let beta = clamp_beta(beta);
    let n_max = n_max.clamp(1, 5);
    let g = TestFunction::constant(0.0);
    let mut rows = Vec::new();
    for n in 1..=n_max {
        // grids sized so the largest case stays interactive in the browser
        let points = match n {
            1..=3 => 128,
            4 => 64,
            _ => 28,
        };
        let params = ModelParams::new(n, beta).expect("clamped parameters are valid");
        let exact = exact_log_integral(&params, &g, 0.0, Scaling::None, &QuadratureSpec::reduced(points))
            .map(|v| v.ln())
            .unwrap_or(f64::NAN);
        let predicted = predict_log_zn(&params);
        rows.push(serde_json::json!({
            "n": n,
            "exact": exact,
            "predicted": predicted,
            "log_ratio": exact - predicted,
        }));
    }
    serde_json::json!({ "beta": beta, "rows": rows }).to_string()
}

/// Exact tilted-integral oracle for `n ≤ 4` used by the demo page to
/// overlay truth on the MGF plot: returns
/// `ln E_n[e^{(t/n)·Σ cos}]` (expectation under the ensemble itself).
#[wasm_bindgen]
pub fn exact_log_mgf_over_n(n: usize, beta: f64, t: f64) -> f64 {
    let n = n.clamp(1, 4);
    let beta = clamp_beta(beta);
    let t = if t.is_finite() { t.clamp(-3.0, 3.0) } else { 0.0 };
    let g = TestFunction::cosine();
    let Ok(params) = ModelParams::new(n, beta) else { return f64::NAN };
    let spec = QuadratureSpec::new(if n <= 3 { 96 } else { 48 });
    let tilted = exact_log_integral(&params, &g, t, Scaling::OverN, &spec);
    let plain = exact_log_integral(&params, &g, 0.0, Scaling::None, &spec);
    match (tilted, plain) {
        (Ok(a), Ok(b)) => a.ln() - b.ln(),
        _ => f64::NAN,
    }
}

/// Closed-form prediction for the same quantity, for the overlay legend.
#[wasm_bindgen]
pub fn predicted_log_mgf_over_n(n: usize, beta: f64, t: f64) -> f64 {
    let n = n.clamp(1, 4);
    let beta = clamp_beta(beta);
    let t = if t.is_finite() { t.clamp(-3.0, 3.0) } else { 0.0 };
    let g = TestFunction::cosine();
    let Ok(params) = ModelParams::new(n, beta) else { return f64::NAN };
    let tilted = predict_log_tilted(&params, &g, t).unwrap_or(f64::NAN);
    tilted - predict_log_zn(&params)
}
