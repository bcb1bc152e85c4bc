//! `antipodal` — command-line interface for the circular ensemble with
//! pairwise weight `∏_{j<k} |e^{iθ_j} + e^{iθ_k}|^β`.
//!
//! Subcommands:
//! * `oracle`  — exact (tensor-grid) quadrature of the partition integral,
//!   optionally exponentially tilted by a test function.
//! * `sample`  — seeded parallel Metropolis replicas; writes retained
//!   samples as CSV plus chain diagnostics.
//! * `verify`  — scripted estimator-vs-prediction suites with verdicts.
//!
//! Exit codes: 0 success (including exploratory/inconclusive verdicts),
//! 1 unexpected I/O failure, 2 invalid input, 3 resource limit or degenerate
//! estimator, 4 sampler initialization failure, 5 a verification suite
//! concluded FAIL.
//!
//! All outputs are pure functions of the configuration (seeds included);
//! the only rerun-dependent bytes are the `created_utc` timestamps inside
//! `manifest.json`.

use anyhow::{bail, Context, Result};
use antipodal_core::experiments::{
    box_ratio_trend, clustering_trend, conjecture_probe, law_trend, mgf_trend, zn_ratio_trend,
    BoxTrendConfig, ClusteringTrendConfig, ConjectureProbeConfig, ExperimentReport, LawTrendConfig,
    MgfTrendConfig, Verdict, ZnTrendConfig,
};
use antipodal_core::model::ModelParams;
use antipodal_core::quadrature::{exact_log_integral_refined, QuadratureSpec, Scaling};
use antipodal_core::sampler::{run_replicas, InitStrategy, SamplerConfig};
use antipodal_core::testfn::TestFunction;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(
    name = "antipodal",
    version,
    about = "Simulate and verify the circular ensemble in which every pair of points repels its antipode",
    long_about = "Toolkit for the n-point Gibbs ensemble on the unit circle with pair weight \
|e^{iθ_j}+e^{iθ_k}|^β: exact small-n quadrature, importance-sampling and Markov-chain \
estimators, closed-form large-n predictions, and scripted verification suites comparing \
the two."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact tensor-grid quadrature of the (optionally tilted) partition integral
    Oracle(OracleArgs),
    /// Run seeded Metropolis replicas; write samples and diagnostics
    Sample(SampleArgs),
    /// Run a verification suite; write a verdict report (exit 5 on FAIL)
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScalingArg {
    /// integrand uses exp((t/n)·Σg)
    N,
    /// integrand uses exp((t/√n)·Σg)
    SqrtN,
    /// integrand uses exp(t·Σg)
    None,
}

impl From<ScalingArg> for Scaling {
    fn from(s: ScalingArg) -> Scaling {
        match s {
            ScalingArg::N => Scaling::OverN,
            ScalingArg::SqrtN => Scaling::OverSqrtN,
            ScalingArg::None => Scaling::None,
        }
    }
}

#[derive(Args)]
struct OracleArgs {
    /// Number of points on the circle
    #[arg(long)]
    n: usize,
    /// Inverse-temperature exponent of the pair weight
    #[arg(long)]
    beta: f64,
    /// Tilt strength (0 = plain partition integral)
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    /// Test function: "cos", "sin", "c:<v>", "fourier:a0,a1,b1,a2,b2,...", "holder:q,amp"
    #[arg(long, default_value = "c:0")]
    g: String,
    /// How the tilt strength is scaled with n
    #[arg(long, value_enum, default_value_t = ScalingArg::None)]
    scaling: ScalingArg,
    /// Grid points per dimension (halved once for the convergence estimate)
    #[arg(long, default_value_t = 128)]
    points_per_dim: usize,
    /// Integrate out the global rotation (one dimension fewer; needs an untilted
    /// or constant-tilt integrand)
    #[arg(long)]
    reduce_rotation: bool,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    /// start all points near one uniformly-drawn center
    Cluster,
    /// start from independent uniform angles
    Uniform,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    beta: f64,
    /// Post-burn-in sweeps per replica
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    /// Burn-in sweeps (step size adapts here, then freezes)
    #[arg(long, default_value_t = 200)]
    burn_in: usize,
    /// Keep every thin-th sweep
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Initial proposal standard deviation (default: the stationary cluster
    /// width 2/√(βn))
    #[arg(long)]
    step_scale: Option<f64>,
    /// Robbins–Monro target for the site-move acceptance rate
    #[arg(long, default_value_t = 0.3)]
    target_acceptance: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Cluster)]
    init: InitArg,
    /// Directory for replica_*.csv, diagnostics.json, manifest.json
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    /// log Z_n estimates vs. the closed-form large-n prediction
    Zn,
    /// exponential linear statistic (t/n scaling) vs. its limit
    Mgf,
    /// law of the per-point average vs. g(U), U uniform
    Law,
    /// probability that all points fit in a shrinking arc
    Clustering,
    /// box-truncated Gaussian integral vs. its closed-form prediction
    Lemma,
    /// variance-corrected MGF prediction under √n scaling (exploratory)
    Conjecture,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// JSON config for the suite (defaults mirror the acceptance settings;
    /// any subset of fields may be given). A "g" field accepts the same
    /// string forms as `oracle --g`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for report.json, report.csv, manifest.json
    #[arg(long)]
    out_dir: PathBuf,
}

// ---------------------------------------------------------------------------
// test-function string syntax
// ---------------------------------------------------------------------------

fn parse_g(s: &str) -> Result<TestFunction> {
    let g = match s {
        "cos" => TestFunction::cosine(),
        "sin" => TestFunction::sine(),
        _ => {
            if let Some(v) = s.strip_prefix("c:") {
                TestFunction::constant(v.parse::<f64>().context("constant value in c:<v>")?)
            } else if let Some(rest) = s.strip_prefix("fourier:") {
                let vals: Vec<f64> = rest
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .context("comma-separated numbers in fourier:a0,a1,b1,...")?;
                if vals.is_empty() {
                    bail!("fourier: needs at least a0");
                }
                let a0 = vals[0];
                let mut cos_coeffs = Vec::new();
                let mut sin_coeffs = Vec::new();
                for pair in vals[1..].chunks(2) {
                    cos_coeffs.push(pair[0]);
                    sin_coeffs.push(if pair.len() == 2 { pair[1] } else { 0.0 });
                }
                TestFunction::Fourier { a0, cos_coeffs, sin_coeffs }
            } else if let Some(rest) = s.strip_prefix("holder:") {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 2 {
                    bail!("holder: needs exactly q,amplitude");
                }
                TestFunction::HolderPower {
                    q: parts[0].trim().parse().context("holder exponent q")?,
                    amplitude: parts[1].trim().parse().context("holder amplitude")?,
                }
            } else {
                bail!(
                    "unrecognized test function {s:?}; use cos, sin, c:<v>, \
                     fourier:a0,a1,b1,..., or holder:q,amp"
                );
            }
        }
    };
    g.validate()?;
    Ok(g)
}

// ---------------------------------------------------------------------------
// manifest + deterministic output plumbing
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    started_utc: String,
    finished_utc: String,
    /// root RNG seed of the run, when the command uses one
    seed: Option<u64>,
    /// FNV-1a 64 of the canonical (serialized) configuration
    config_hash: String,
    config: serde_json::Value,
    outputs: Vec<String>,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Proleptic-Gregorian civil date from days since 1970-01-01.
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = (z - era * 146_097) as u64;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe as i64 + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}

fn iso8601_utc_now() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let (h, m, s) = ((secs / 3600) % 24, (secs / 60) % 60, secs % 60);
    let (year, month, day) = civil_from_days((secs / 86_400) as i64);
    format!("{year:04}-{month:02}-{day:02}T{h:02}:{m:02}:{s:02}Z")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn write_manifest(
    dir: &Path,
    command: &'static str,
    started_utc: String,
    seed: Option<u64>,
    config: serde_json::Value,
    outputs: Vec<String>,
) -> Result<()> {
    let canonical = serde_json::to_vec(&config)?;
    let manifest = RunManifest {
        tool: "antipodal",
        version: env!("CARGO_PKG_VERSION"),
        command,
        started_utc,
        finished_utc: iso8601_utc_now(),
        seed,
        config_hash: format!("fnv1a64:{:016x}", fnv1a64(&canonical)),
        config,
        outputs,
    };
    let mut body = serde_json::to_vec_pretty(&manifest)?;
    body.push(b'\n');
    write_atomic(&dir.join("manifest.json"), &body)
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn cmd_oracle(args: &OracleArgs) -> Result<i32> {
    let g = parse_g(&args.g)?;
    let params = ModelParams::new(args.n, args.beta)?;
    let spec = if args.reduce_rotation {
        QuadratureSpec::reduced(args.points_per_dim)
    } else {
        QuadratureSpec::new(args.points_per_dim)
    };
    let (value, convergence_estimate) =
        exact_log_integral_refined(&params, &g, args.t, args.scaling.into(), &spec)?;

    let payload = serde_json::json!({
        "n": args.n,
        "beta": args.beta,
        "t": args.t,
        "g": args.g,
        "g_parsed": g,
        "scaling": format!("{:?}", Scaling::from(args.scaling)),
        "grid": {
            "points_per_dim": args.points_per_dim,
            "reduce_rotation": args.reduce_rotation,
        },
        "log_value": value.ln(),
        "convergence_estimate": convergence_estimate,
    });
    let mut body = serde_json::to_string_pretty(&payload)?;
    body.push('\n');
    match &args.out {
        Some(path) => write_atomic(path, body.as_bytes())?,
        None => print!("{body}"),
    }
    Ok(0)
}

fn cmd_sample(args: &SampleArgs) -> Result<i32> {
    let started_utc = iso8601_utc_now();
    let mut cfg = SamplerConfig::new(ModelParams::new(args.n, args.beta)?);
    cfg.sweeps = args.sweeps;
    cfg.burn_in = args.burn_in;
    cfg.thin = args.thin;
    cfg.replicas = args.replicas;
    cfg.seed = args.seed;
    cfg.step_scale = args.step_scale;
    cfg.target_acceptance = args.target_acceptance;
    cfg.init = match args.init {
        InitArg::Cluster => InitStrategy::ClusterAtUniform,
        InitArg::Uniform => InitStrategy::UniformIid,
    };
    let runs = run_replicas(&cfg)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut outputs = Vec::new();
    let mut diagnostics = Vec::new();
    for (r, run) in runs.iter().enumerate() {
        let name = format!("replica_{r:03}.csv");
        let mut csv = String::from("retained_index");
        for j in 0..args.n {
            write!(csv, ",theta_{j}").unwrap();
        }
        csv.push('\n');
        for (i, sample) in run.samples.iter().enumerate() {
            write!(csv, "{i}").unwrap();
            for &a in sample.angles() {
                write!(csv, ",{a}").unwrap();
            }
            csv.push('\n');
        }
        write_atomic(&args.out_dir.join(&name), csv.as_bytes())?;
        outputs.push(name);
        diagnostics.push(serde_json::json!({
            "replica": r,
            "retained_samples": run.samples.len(),
            "acceptance_rate": run.diagnostics.acceptance_rate,
            "integrated_autocorr_time": run.diagnostics.integrated_autocorr_time,
            "effective_sample_size": run.diagnostics.effective_sample_size,
            "final_step_scale": run.diagnostics.final_step_scale,
        }));
    }
    let mut body = serde_json::to_string_pretty(&serde_json::Value::Array(diagnostics))?;
    body.push('\n');
    write_atomic(&args.out_dir.join("diagnostics.json"), body.as_bytes())?;
    outputs.push("diagnostics.json".into());

    let config = serde_json::json!({
        "n": args.n,
        "beta": args.beta,
        "sweeps": args.sweeps,
        "burn_in": args.burn_in,
        "thin": args.thin,
        "replicas": args.replicas,
        "seed": args.seed,
        "step_scale": args.step_scale,
        "target_acceptance": args.target_acceptance,
        "init": format!("{:?}", cfg.init),
    });
    write_manifest(&args.out_dir, "sample", started_utc, Some(args.seed), config, outputs)?;
    eprintln!(
        "wrote {} replicas × retained samples to {}",
        runs.len(),
        args.out_dir.display()
    );
    Ok(0)
}

/// Reads the suite config; a `"g"` field given as a string is rewritten into
/// the structured test-function form before deserialization.
fn load_config<T: serde::de::DeserializeOwned + Default + Serialize>(
    path: &Option<PathBuf>,
) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let raw = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let mut value: serde_json::Value =
                serde_json::from_str(&raw).context("config is not valid JSON")?;
            if let Some(gv) = value.get_mut("g") {
                if let Some(s) = gv.as_str() {
                    let parsed = parse_g(s)?;
                    *gv = serde_json::to_value(&parsed)?;
                }
            }
            serde_json::from_value(value).context("config does not match the suite schema")
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let started_utc = iso8601_utc_now();
    let (report, config): (ExperimentReport, serde_json::Value) = match args.suite {
        Suite::Zn => {
            let cfg: ZnTrendConfig = load_config(&args.config)?;
            (zn_ratio_trend(&cfg)?, serde_json::to_value(&cfg)?)
        }
        Suite::Mgf => {
            let cfg: MgfTrendConfig = load_config(&args.config)?;
            (mgf_trend(&cfg)?, serde_json::to_value(&cfg)?)
        }
        Suite::Law => {
            let cfg: LawTrendConfig = load_config(&args.config)?;
            (law_trend(&cfg)?, serde_json::to_value(&cfg)?)
        }
        Suite::Clustering => {
            let cfg: ClusteringTrendConfig = load_config(&args.config)?;
            (clustering_trend(&cfg)?, serde_json::to_value(&cfg)?)
        }
        Suite::Lemma => {
            let cfg: BoxTrendConfig = load_config(&args.config)?;
            (box_ratio_trend(&cfg)?, serde_json::to_value(&cfg)?)
        }
        Suite::Conjecture => {
            let cfg: ConjectureProbeConfig = load_config(&args.config)?;
            (conjecture_probe(&cfg)?, serde_json::to_value(&cfg)?)
        }
    };

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    write_atomic(&args.out_dir.join("report.json"), body.as_bytes())?;
    write_atomic(&args.out_dir.join("report.csv"), report.to_csv().as_bytes())?;
    write_manifest(
        &args.out_dir,
        "verify",
        started_utc,
        Some(report.seed),
        serde_json::json!({ "suite": format!("{:?}", args.suite).to_lowercase(), "config": config }),
        vec!["report.json".into(), "report.csv".into()],
    )?;

    println!("suite {:?}: {:?}", args.suite, report.overall);
    for row in &report.rows {
        println!(
            "  n={} estimate={:.6} ± {:.3e} prediction={:.6} log_ratio={:+.6} [{:?}]",
            row.n, row.estimate, row.std_error, row.prediction, row.log_ratio, row.verdict
        );
    }
    for note in &report.notes {
        println!("  note: {note}");
    }
    Ok(if report.overall == Verdict::Fail { 5 } else { 0 })
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<antipodal_core::Error>() {
        match core {
            antipodal_core::Error::Domain(_) => 2,
            antipodal_core::Error::Resource(_) => 3,
            antipodal_core::Error::DegenerateWeights { .. } => 3,
            antipodal_core::Error::SamplerInit(_) => 4,
        }
    } else if err.downcast_ref::<std::io::Error>().is_some() {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("ANTIPODAL_THREADS") {
        match threads.parse::<usize>() {
            Ok(t) if t >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            _ => {
                eprintln!("error: ANTIPODAL_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Oracle(args) => cmd_oracle(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_string_forms_parse() {
        assert!(matches!(parse_g("cos").unwrap(), TestFunction::Fourier { .. }));
        assert!(matches!(parse_g("holder:0.5,2").unwrap(), TestFunction::HolderPower { .. }));
        let g = parse_g("fourier:0.5,1,-1,0.25").unwrap();
        match g {
            TestFunction::Fourier { a0, cos_coeffs, sin_coeffs } => {
                assert_eq!(a0, 0.5);
                assert_eq!(cos_coeffs, vec![1.0, 0.25]);
                assert_eq!(sin_coeffs, vec![-1.0, 0.0]);
            }
            _ => panic!("expected Fourier"),
        }
        assert!(parse_g("nope").is_err());
        assert!(parse_g("holder:1.5,1").is_err()); // q out of range
        assert!(parse_g("c:abc").is_err());
    }

    #[test]
    fn civil_date_conversion_known_values() {
        assert_eq!(civil_from_days(0), (1970, 1, 1));
        assert_eq!(civil_from_days(19_723), (2024, 1, 1)); // leap year start
        assert_eq!(civil_from_days(19_723 + 59), (2024, 2, 29));
        assert_eq!(civil_from_days(-1), (1969, 12, 31));
    }

    #[test]
    fn fnv_hash_matches_reference_vectors() {
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
