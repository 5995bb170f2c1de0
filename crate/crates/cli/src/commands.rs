//! Subcommand implementations. Each returns the JSON document it prints, so
//! they can be driven in-process as well as from the binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use cttts_core::allocation::{
    allocation_for_gamma, balance_residual_topm, kkt_residual_best, optimize_gamma, solve_topm_allocation,
    AllocationVector, ContextProblem, TopmOptions,
};
use cttts_core::harness::{run_experiment, write_csv, HarnessError, Registries};
use cttts_core::instance::{Family, InstanceFile, ProblemInstance};
use cttts_core::kl::{kl_gaussian, kl_weibull_censored};
use cttts_core::policy::analytic_policy_prob;
use cttts_core::rates::{RateFamily, RateRegistry, SharedRate};

use crate::config::{parse_json, CliConfig, Overrides};
use crate::error::CliError;

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Metadata path next to a CSV: `results.csv` -> `results.meta.json`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// Result of `run`: where the outputs went and the metadata written.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub rows: usize,
}

/// `run`: load the config, run every policy, write the CSV and metadata.
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<RunOutput, CliError> {
    let mut config = CliConfig::load(config_path)?;
    config.apply(overrides)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let registries = Registries::default();
    let (instance, experiment) = config.resolve(base, &registries)?;
    let out = config
        .out
        .clone()
        .ok_or_else(|| CliError::Config("no output path: set \"out\" in the config or pass --out".into()))?;

    let started = Instant::now();
    let result = run_experiment(&instance, &experiment, &registries).map_err(|e| match e {
        HarnessError::Replication { .. } => CliError::Runtime(format!(
            "replication {} failed: {e}",
            e.replication().expect("replication error")
        )),
        other => CliError::Runtime(other.to_string()),
    })?;
    let wall = started.elapsed().as_secs_f64();

    let runtime = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", out.display()));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(runtime)?;
    }
    let file = std::fs::File::create(&out).map_err(runtime)?;
    write_csv(&result.curves, std::io::BufWriter::new(file)).map_err(|e| CliError::Runtime(e.to_string()))?;

    let metadata = json!({
        "config": config,
        "resolved": experiment,
        "instance": {
            "family": instance.family(),
            "contexts": instance.n_contexts(),
            "designs": instance.n_designs(),
            "m": instance.m(),
        },
        "se_defined": result.curves.iter().all(|c| c.se_defined),
        "diagnostics": result.diagnostics,
        "wall_time_seconds": wall,
        "versions": { "cttts": env!("CARGO_PKG_VERSION") },
    });
    let meta_path = metadata_path(&out);
    std::fs::write(&meta_path, serde_json::to_string_pretty(&metadata).expect("serializable"))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", meta_path.display())))?;
    Ok(RunOutput {
        csv: out,
        metadata: meta_path,
        rows: result.curves.iter().map(|c| c.points.len()).sum(),
    })
}

/// Which static problem `solve-allocation` solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum SolveMethod {
    /// `best` when every context has one preferred design, otherwise `topm`.
    #[default]
    Auto,
    /// Gamma search plus balance (one preferred design per context).
    Best,
    /// Simplex ascent on the top-m objective.
    Topm,
}

#[derive(Debug, Clone, Default)]
pub struct SolveArgs {
    pub input: PathBuf,
    /// Fixed preferred share for every context instead of optimizing it.
    pub gamma: Option<f64>,
    /// Target sizes overriding the instance's (one value, or one per context).
    pub m: Option<Vec<usize>>,
    pub method: SolveMethod,
    /// Rate family for instance inputs; defaults to the instance family's.
    pub rate_family: Option<String>,
}

fn rate_family(name: Option<&str>, instance: &ProblemInstance) -> Result<RateFamily, CliError> {
    match name {
        None => Ok(match instance.family() {
            Family::Gaussian => RateFamily::GaussianKnownVar,
            Family::WeibullCensored => RateFamily::WeibullCensored { tau: instance.tau().unwrap_or(f64::INFINITY) },
        }),
        Some("gaussian-known-var") => Ok(RateFamily::GaussianKnownVar),
        Some("gaussian-unknown-var") => Ok(RateFamily::GaussianUnknownVar),
        Some("weibull-censored") => Ok(RateFamily::WeibullCensored { tau: instance.tau().unwrap_or(f64::INFINITY) }),
        Some(other) => Err(CliError::Config(format!(
            "unknown rate family {other:?}; valid: gaussian-known-var, gaussian-unknown-var, weibull-censored"
        ))),
    }
}

/// Problems from an instance file (has `family`) or a rate-problem file:
/// `{"contexts": [{"rates": [[spec, ...], ...]}]}` where row `i` holds the
/// rates of preferred design `i` against each undesired design, and designs
/// are numbered preferred first.
fn load_problems(args: &SolveArgs) -> Result<Vec<ContextProblem>, CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.input.display())))?;
    let doc: Value = parse_json(&text, &args.input.display().to_string())?;
    if doc.get("family").is_some() {
        let file: InstanceFile = serde_json::from_value(doc).map_err(config_err)?;
        let mut instance = ProblemInstance::try_from(file).map_err(config_err)?;
        if let Some(m) = &args.m {
            let m = if m.len() == 1 { vec![m[0]; instance.n_contexts()] } else { m.clone() };
            instance = instance.with_m(m).map_err(config_err)?;
        }
        let family = rate_family(args.rate_family.as_deref(), &instance)?;
        instance
            .context_ranges()
            .iter()
            .enumerate()
            .map(|(c, r)| {
                let ds = &instance.designs()[r.clone()];
                let mus: Vec<f64> = ds.iter().map(|d| d.mu).collect();
                let etas: Vec<f64> = ds.iter().map(|d| d.eta).collect();
                ContextProblem::from_parameters(&mus, &etas, instance.m()[c], family)
                    .map_err(|e| CliError::Config(format!("context {c}: {e}")))
            })
            .collect()
    } else {
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RateProblemFile {
            contexts: Vec<RateContext>,
        }
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RateContext {
            rates: Vec<Vec<Value>>,
        }
        if args.m.is_some() || args.rate_family.is_some() {
            return Err(CliError::Config("--m and --rate-family apply to instance inputs only".into()));
        }
        let file: RateProblemFile = serde_json::from_value(doc).map_err(config_err)?;
        let registry = RateRegistry::with_defaults();
        file.contexts
            .iter()
            .enumerate()
            .map(|(c, ctx)| {
                let rates: Vec<Vec<SharedRate>> = ctx
                    .rates
                    .iter()
                    .map(|row| row.iter().map(|s| registry.build(s)).collect::<Result<_, _>>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| CliError::Config(format!("context {c}: {e}")))?;
                let n_p = rates.len();
                let n_u = rates.first().map_or(0, Vec::len);
                ContextProblem::new(n_p + n_u, (0..n_p).collect(), (n_p..n_p + n_u).collect(), rates)
                    .map_err(|e| CliError::Config(format!("context {c}: {e}")))
            })
            .collect()
    }
}

fn pair_rates(allocation: &AllocationVector, problems: &[ContextProblem]) -> Vec<Vec<Vec<f64>>> {
    problems
        .iter()
        .zip(&allocation.beta)
        .map(|(p, beta)| {
            p.rates
                .iter()
                .zip(&p.preferred)
                .map(|(row, &d)| row.iter().zip(&p.undesired).map(|(r, &u)| r.value(beta[d], beta[u])).collect())
                .collect()
        })
        .collect()
}

/// `solve-allocation`: solves the static problem and reports the allocation
/// with its optimality residuals.
pub fn cmd_solve(args: &SolveArgs) -> Result<Value, CliError> {
    let problems = load_problems(args)?;
    if problems.is_empty() {
        return Err(CliError::Config("no contexts".into()));
    }
    let single = problems.iter().all(|p| p.preferred.len() == 1);
    let method = match args.method {
        SolveMethod::Auto if single => SolveMethod::Best,
        SolveMethod::Auto => SolveMethod::Topm,
        m => m,
    };
    let mut warnings: Vec<String> = Vec::new();
    let (allocation, degraded, topm_residual) = match method {
        SolveMethod::Best => {
            if !single {
                return Err(CliError::Config("method best needs one preferred design per context".into()));
            }
            let allocation = match args.gamma {
                Some(g) => allocation_for_gamma(&problems, &vec![g; problems.len()]),
                None => optimize_gamma(&problems),
            }
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            let residual = balance_residual_topm(&allocation, &problems);
            (allocation, false, residual)
        }
        _ => {
            if args.gamma.is_some() {
                return Err(CliError::Config("--gamma applies to method best only".into()));
            }
            let sol = solve_topm_allocation(&problems, &TopmOptions::default())
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            if sol.degraded {
                warnings.push(format!("balance residual {:.3e} above threshold; allocation may be suboptimal", sol.residual));
            }
            (sol.allocation, sol.degraded, sol.residual)
        }
    };
    let kkt = if single {
        match kkt_residual_best(&allocation, &problems) {
            Ok(r) => {
                if !r.kinks.is_empty() {
                    warnings.push(format!("{} rate entries sit at a kink and are excluded from eq9", r.kinks.len()));
                }
                Some(r)
            }
            Err(e) => {
                warnings.push(format!("stationarity residual unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };
    let pairs = pair_rates(&allocation, &problems);
    let min_pair: Vec<f64> =
        pairs.iter().map(|c| c.iter().flatten().copied().fold(f64::INFINITY, f64::min)).collect();
    Ok(json!({
        "method": match method { SolveMethod::Best => "best", _ => "topm" },
        "gamma_mode": if args.gamma.is_some() { "fixed" } else { "optimized" },
        "alpha": allocation.alpha,
        "beta": allocation.beta,
        "gamma": allocation.gamma,
        "context_values": allocation.context_values,
        "value": allocation.value,
        "pair_rates": pairs,
        "min_pair_rate": min_pair,
        "residuals": {
            "eq9": kkt.as_ref().map(|r| r.eq9.clone()),
            "eq9_kinks": kkt.as_ref().map(|r| r.kinks.clone()),
            "eq10_spread": kkt.as_ref().map(|r| r.eq10_spread),
            "balance": topm_residual,
        },
        "degraded": degraded,
        "warnings": warnings,
    }))
}

#[derive(Debug, Clone, Default)]
pub struct RatesArgs {
    /// `gaussian-known-var`, `gaussian-unknown-var`, `weibull-censored`,
    /// `harmonic` or `min` (the last two take no parameters).
    pub family: String,
    /// `(mu, eta)` of the preferred design.
    pub theta: Option<[f64; 2]>,
    /// `(mu, eta)` of the undesired design.
    pub theta_prime: Option<[f64; 2]>,
    /// Allocations `(psi_d, psi_d')`.
    pub psi: Option<[f64; 2]>,
    pub tau: Option<f64>,
    /// Report the divergence of `theta` from `theta_prime` instead of a rate.
    pub kl: bool,
}

/// `rates`: evaluates one rate (and its crossing value) or one divergence.
pub fn cmd_rates(args: &RatesArgs) -> Result<Value, CliError> {
    let need = |v: Option<[f64; 2]>, flag: &str| v.ok_or_else(|| CliError::Config(format!("{flag} is required")));
    if args.kl {
        let (a, b) = (need(args.theta, "--theta")?, need(args.theta_prime, "--theta-prime")?);
        let kl = match args.family.as_str() {
            "gaussian" | "gaussian-known-var" | "gaussian-unknown-var" => kl_gaussian(a[0], a[1], b[0], b[1]),
            "weibull-censored" => kl_weibull_censored(a[0], a[1], b[0], b[1], args.tau.unwrap_or(f64::INFINITY)),
            other => {
                return Err(CliError::Config(format!(
                    "unknown divergence family {other:?}; valid: gaussian, weibull-censored"
                )))
            }
        }
        .map_err(|e| match e {
            cttts_core::kl::KlError::NonPositiveVariance(_) | cttts_core::kl::KlError::InvalidWeibull(_) => config_err(e),
            other => CliError::Runtime(other.to_string()),
        })?;
        return Ok(json!({ "family": args.family, "theta": a, "theta_prime": b, "kl": kl }));
    }
    let psi = need(args.psi, "--psi")?;
    if psi.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(CliError::Config("--psi values must be finite and non-negative".into()));
    }
    let spec = match args.family.as_str() {
        "harmonic" | "min" => json!({ "type": args.family }),
        "gaussian-known-var" | "gaussian-unknown-var" => {
            let (a, b) = (need(args.theta, "--theta")?, need(args.theta_prime, "--theta-prime")?);
            json!({ "type": args.family, "mu": [a[0], b[0]], "var": [a[1], b[1]] })
        }
        "weibull-censored" => {
            let (a, b) = (need(args.theta, "--theta")?, need(args.theta_prime, "--theta-prime")?);
            let mut s = json!({ "type": args.family, "mu": [a[0], b[0]], "k": [a[1], b[1]] });
            if let Some(t) = args.tau {
                s["tau"] = json!(t);
            }
            s
        }
        _ => json!({ "type": args.family }),
    };
    let rate = RateRegistry::with_defaults().build(&spec).map_err(config_err)?;
    Ok(json!({
        "family": args.family,
        "psi": psi,
        "rate": rate.value(psi[0], psi[1]),
        "crossing": rate.crossing(psi[0], psi[1]),
    }))
}

/// `policy-prob` input: `pi[c][d]` and `gamma` (scalar or per context).
#[derive(Debug, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyProbInput {
    pub pi: Vec<Vec<f64>>,
    pub gamma: GammaInput,
}

#[derive(Debug, Clone, serde::Deserialize)]
#[serde(untagged)]
pub enum GammaInput {
    One(f64),
    PerContext(Vec<f64>),
}

/// `policy-prob`: exact per-step sampling probabilities of the top-two rule.
pub fn cmd_policy_prob(input: &PolicyProbInput) -> Result<Value, CliError> {
    let gamma = match &input.gamma {
        GammaInput::One(g) => vec![*g; input.pi.len()],
        GammaInput::PerContext(v) => v.clone(),
    };
    let p = analytic_policy_prob(&input.pi, &gamma).map_err(config_err)?;
    serde_json::to_value(p).map_err(|e| CliError::Runtime(e.to_string()))
}
