//! Command-line front end: argument parsing, configuration files and the
//! subcommand implementations.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::Value;

use commands::{PolicyProbInput, RatesArgs, SolveArgs, SolveMethod};
use config::{parse_json, Overrides};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cttts", version, about = "Top-two Thompson sampling for contextual top-m selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation experiment and write its PCS curves as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// CSV output path (metadata is written next to it as `.meta.json`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        budget: Option<u64>,
        /// Worker threads; the CTTTS_THREADS environment variable wins over this.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Solve the static optimal-allocation problem for an instance or rate problem.
    SolveAllocation {
        #[arg(long)]
        input: PathBuf,
        /// Fix the preferred share of every context instead of optimizing it.
        #[arg(long)]
        gamma: Option<f64>,
        /// Target size, one value or one per context (comma separated).
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = SolveMethod::Auto)]
        method: SolveMethod,
        /// gaussian-known-var, gaussian-unknown-var or weibull-censored.
        #[arg(long)]
        rate_family: Option<String>,
    },
    /// Evaluate one pairwise rate, or a divergence with --kl.
    Rates {
        #[arg(long)]
        family: String,
        /// Preferred design parameters `MU,ETA`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        /// Undesired design parameters `MU,ETA`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta_prime: Option<Vec<f64>>,
        /// Allocations `PSI_D,PSI_D'`.
        #[arg(long, value_delimiter = ',')]
        psi: Option<Vec<f64>>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        kl: bool,
    },
    /// Exact per-step sampling probabilities of the top-two rule.
    PolicyProb {
        /// Inline JSON `pi[c][d]` of top-set membership probabilities.
        #[arg(long, conflicts_with = "input")]
        pi: Option<String>,
        /// JSON file `{"pi": [[...]], "gamma": ...}`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Preferred share, one value or one per context (comma separated).
        #[arg(long, value_delimiter = ',')]
        gamma: Option<Vec<f64>>,
    },
}

fn pair(v: Option<Vec<f64>>, flag: &str) -> Result<Option<[f64; 2]>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some(&[a, b]) => Ok(Some([a, b])),
        Some(_) => Err(CliError::Config(format!("{flag} takes exactly two comma-separated values"))),
    }
}

/// Executes a parsed command, returning the JSON document to print.
pub fn execute(command: Command) -> Result<Value, CliError> {
    match command {
        Command::Run { config, out, seed, reps, budget, parallelism } => {
            let out = commands::cmd_run(&config, &Overrides { out, seed, reps, budget, parallelism })?;
            Ok(serde_json::to_value(out).expect("serializable"))
        }
        Command::SolveAllocation { input, gamma, m, method, rate_family } => {
            commands::cmd_solve(&SolveArgs { input, gamma, m, method, rate_family })
        }
        Command::Rates { family, theta, theta_prime, psi, tau, kl } => commands::cmd_rates(&RatesArgs {
            family,
            theta: pair(theta, "--theta")?,
            theta_prime: pair(theta_prime, "--theta-prime")?,
            psi: pair(psi, "--psi")?,
            tau,
            kl,
        }),
        Command::PolicyProb { pi, input, gamma } => {
            let mut doc: Value = match (pi, input) {
                (Some(pi), None) => serde_json::json!({ "pi": parse_json::<Value>(&pi, "--pi")? }),
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                    parse_json(&text, &path.display().to_string())?
                }
                _ => return Err(CliError::Config("give one of --pi and --input".into())),
            };
            if let Some(g) = gamma {
                doc["gamma"] = if g.len() == 1 { serde_json::json!(g[0]) } else { serde_json::json!(g) };
            }
            if doc.get("gamma").is_none() {
                return Err(CliError::Config("gamma is required (--gamma or in the input file)".into()));
            }
            let input: PolicyProbInput =
                serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
            commands::cmd_policy_prob(&input)
        }
    }
}
