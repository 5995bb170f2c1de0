//! Seeded macro-replications of (instance, policy, budget).
//!
//! Replication `r` of every policy draws its observations from the stream
//! `(seed, r, Simulation)` and its own randomness from `(seed, r, Policy)`,
//! so replications are independent of each other, of the thread that runs
//! them, and policies see common random numbers.

mod export;
mod metrics;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::history::AllocationHistory;
use crate::instance::{Family, InstanceError, ProblemInstance};
use crate::policy::{select_final, PolicyError, PolicyRegistry, PolicySpec, SelectionMode, StepContext};
use crate::posterior::{PosteriorError, PosteriorRegistry};
use crate::rng::{stream, Stream};

pub use export::{format_sig10, write_csv, CSV_HEADER};
pub use metrics::{aggregate, CheckpointMetrics, MetricsCurve};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("policy {policy:?}, replication {rep}: {source}")]
    Replication {
        policy: String,
        rep: usize,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Replication index of a failed replication.
    pub fn replication(&self) -> Option<usize> {
        match self {
            HarnessError::Replication { rep, .. } => Some(*rep),
            _ => None,
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub policies: Vec<PolicySpec>,
    /// Total budget `T` per replication, initial samples included.
    pub budget: u64,
    /// Initial samples per design `n0`, allocated round-robin.
    pub init_per_design: u64,
    /// Budgets at which the selection is scored; strictly increasing, within
    /// `[n0 |D|, T]`.
    pub checkpoints: Vec<u64>,
    pub reps: usize,
    pub seed: u64,
    /// Context weights of PCSE.
    pub weights: Vec<f64>,
    pub parallelism: usize,
    pub selection: SelectionMode,
}

/// Number of default checkpoints.
pub const DEFAULT_CHECKPOINT_COUNT: usize = 20;

/// Log-spaced integer budgets from `lo` to `hi` inclusive, deduplicated.
pub fn log_spaced_checkpoints(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    if hi <= lo || count < 2 {
        return vec![hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u64)
        .map(|t| t.clamp(lo, hi))
        .collect();
    out.dedup();
    *out.last_mut().expect("non-empty") = hi;
    out
}

impl ExperimentConfig {
    /// Defaults: `n0 = 10`, 20 log-spaced checkpoints, equal weights, plugin
    /// selection, one thread.
    pub fn new(instance: &ProblemInstance, policies: Vec<PolicySpec>, budget: u64, reps: usize, seed: u64) -> Self {
        let init = 10;
        ExperimentConfig {
            policies,
            budget,
            init_per_design: init,
            checkpoints: log_spaced_checkpoints(init * instance.n_designs() as u64, budget, DEFAULT_CHECKPOINT_COUNT),
            reps,
            seed,
            weights: vec![1.0 / instance.n_contexts() as f64; instance.n_contexts()],
            parallelism: 1,
            selection: SelectionMode::Plugin,
        }
    }

    pub fn validate(&self, instance: &ProblemInstance) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        let start = self.init_per_design * instance.n_designs() as u64;
        if self.init_per_design == 0 {
            return bad("init_per_design must be at least 1".into());
        }
        if self.budget < start {
            return bad(format!("budget {} is below the initial allocation {start}", self.budget));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if self.checkpoints.is_empty() || self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("checkpoints must be non-empty and strictly increasing".into());
        }
        if self.checkpoints[0] < start || *self.checkpoints.last().expect("non-empty") > self.budget {
            return bad(format!("checkpoints must lie in [{start}, {}]", self.budget));
        }
        if self.weights.len() != instance.n_contexts()
            || self.weights.iter().any(|w| !(*w >= 0.0))
            || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad(format!("weights must be {} non-negative numbers summing to 1", instance.n_contexts()));
        }
        let mut labels: Vec<&str> = self.policies.iter().map(PolicySpec::label).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return bad("policy labels must be unique".into());
        }
        Ok(())
    }
}

/// Posterior model used when a policy does not name one.
pub fn default_model(family: Family) -> &'static str {
    match family {
        Family::Gaussian => "normal-gamma",
        Family::WeibullCensored => "weibull-grid",
    }
}

/// Strategy registries used to build policies and posteriors.
#[derive(Clone, Default)]
pub struct Registries {
    pub policies: PolicyRegistry,
    pub posteriors: PosteriorRegistry,
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    /// `correct[k][c]`: context `c` selected correctly at checkpoint `k`.
    pub correct: Vec<Vec<bool>>,
    /// `counts[k][d]`: samples of design `d` at checkpoint `k`.
    pub counts: Vec<Vec<u64>>,
    /// Policy weights at the end of the run, if the policy has them.
    pub final_gamma: Option<Vec<f64>>,
    pub steps: u64,
    pub fallback_steps: u64,
    pub resamples: u64,
    pub tie_steps: u64,
    pub warnings: usize,
}

/// Runs replication `rep` of one policy.
pub fn run_replication(
    instance: &ProblemInstance,
    spec: &PolicySpec,
    config: &ExperimentConfig,
    registries: &Registries,
    rep: usize,
) -> Result<ReplicationRecord, HarnessError> {
    let mut sim = stream(config.seed, rep as u64, Stream::Simulation);
    let mut rng = stream(config.seed, rep as u64, Stream::Policy);
    let mut sel_rng = stream(config.seed, rep as u64, Stream::Selection);
    let model = spec.model.as_deref().unwrap_or(default_model(instance.family()));
    let mut posterior = registries.posteriors.build(model, instance, &spec.model_params)?;
    let mut policy = registries.policies.build(spec, instance)?;
    let mut history = AllocationHistory::new(instance);
    let truth: Vec<Vec<usize>> =
        (0..instance.n_contexts()).map(|c| instance.true_top_m(c)).collect::<Result<_, _>>()?;

    let mut record = ReplicationRecord {
        correct: Vec::with_capacity(config.checkpoints.len()),
        counts: Vec::with_capacity(config.checkpoints.len()),
        final_gamma: None,
        steps: 0,
        fallback_steps: 0,
        resamples: 0,
        tie_steps: 0,
        warnings: 0,
    };
    let mut next = 0;
    let mut score = |history: &AllocationHistory,
                     posterior: &mut dyn crate::posterior::Posterior,
                     record: &mut ReplicationRecord,
                     next: &mut usize|
     -> Result<(), HarnessError> {
        while *next < config.checkpoints.len() && history.total() == config.checkpoints[*next] {
            let selected = select_final(posterior, instance, config.selection, &mut sel_rng)?;
            record.correct.push(selected.iter().zip(&truth).map(|(s, t)| s == t).collect());
            record.counts.push(history.counts().to_vec());
            *next += 1;
        }
        Ok(())
    };

    for _ in 0..config.init_per_design {
        for g in 0..instance.n_designs() {
            let y = instance.simulate(g, &mut sim)?.value;
            posterior.observe(g, y)?;
            history.record(g, y);
        }
    }
    score(&history, posterior.as_mut(), &mut record, &mut next)?;
    while history.total() < config.budget {
        let decision = policy.step(StepContext {
            instance,
            posterior: posterior.as_mut(),
            history: &history,
            rng: &mut rng,
        })?;
        record.steps += 1;
        record.resamples += decision.resamples_used as u64;
        record.fallback_steps += decision.fallback as u64;
        record.tie_steps += decision.tie as u64;
        let y = instance.simulate(decision.design, &mut sim)?.value;
        posterior.observe(decision.design, y)?;
        history.record(decision.design, y);
        score(&history, posterior.as_mut(), &mut record, &mut next)?;
    }
    debug_assert_eq!(history.total(), config.budget);
    record.final_gamma = policy.gamma().map(<[f64]>::to_vec);
    record.warnings = policy.warnings();
    Ok(record)
}

/// Runs every replication of one policy on a pool of `config.parallelism`
/// threads; results are in replication order. On failure, the error of the
/// lowest failing replication is returned.
pub fn run_policy(
    instance: &ProblemInstance,
    spec: &PolicySpec,
    config: &ExperimentConfig,
    registries: &Registries,
) -> Result<Vec<ReplicationRecord>, HarnessError> {
    // Fail fast on configuration errors before spawning work.
    registries.policies.build(spec, instance)?;
    let model = spec.model.as_deref().unwrap_or(default_model(instance.family()));
    registries.posteriors.build(model, instance, &spec.model_params)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<ReplicationRecord, HarnessError>> = pool.install(|| {
        (0..config.reps)
            .into_par_iter()
            .map(|rep| run_replication(instance, spec, config, registries, rep))
            .collect()
    });
    results
        .into_iter()
        .enumerate()
        .map(|(rep, r)| {
            r.map_err(|e| HarnessError::Replication { policy: spec.label().to_string(), rep, source: Box::new(e) })
        })
        .collect()
}

/// Per-policy run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyDiagnostics {
    pub policy: String,
    /// Fraction of policy steps decided by the fallback rule.
    pub fallback_fraction: f64,
    /// Mean posterior re-draws per policy step.
    pub mean_resamples: f64,
    /// Steps in which a tie among sampled means was broken by design order.
    pub tie_steps: u64,
    pub warnings: usize,
}

impl PolicyDiagnostics {
    pub fn from_records(policy: &str, records: &[ReplicationRecord]) -> Self {
        let steps: u64 = records.iter().map(|r| r.steps).sum();
        let per_step = |x: u64| if steps == 0 { 0.0 } else { x as f64 / steps as f64 };
        PolicyDiagnostics {
            policy: policy.to_string(),
            fallback_fraction: per_step(records.iter().map(|r| r.fallback_steps).sum()),
            mean_resamples: per_step(records.iter().map(|r| r.resamples).sum()),
            tie_steps: records.iter().map(|r| r.tie_steps).sum(),
            warnings: records.iter().map(|r| r.warnings).sum(),
        }
    }
}

/// Curves and diagnostics of a whole experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub curves: Vec<MetricsCurve>,
    pub diagnostics: Vec<PolicyDiagnostics>,
}

/// Runs every policy of `config` and aggregates the metrics.
pub fn run_experiment(
    instance: &ProblemInstance,
    config: &ExperimentConfig,
    registries: &Registries,
) -> Result<ExperimentResult, HarnessError> {
    config.validate(instance)?;
    let mut curves = Vec::with_capacity(config.policies.len());
    let mut diagnostics = Vec::with_capacity(config.policies.len());
    for spec in &config.policies {
        let records = run_policy(instance, spec, config, registries)?;
        curves.push(aggregate(spec.label(), &config.checkpoints, &config.weights, &records));
        diagnostics.push(PolicyDiagnostics::from_records(spec.label(), &records));
    }
    Ok(ExperimentResult { curves, diagnostics })
}
