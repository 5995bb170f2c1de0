//! Sequential sampling policies.
//!
//! A [`Policy`] chooses the next `(context, design)` to simulate from the
//! current posterior and allocation history. Policies are registered by name
//! in a [`PolicyRegistry`] and built from a [`PolicySpec`] at runtime.

mod analytic;
mod equal;
mod kkt_tracking;
mod selection;
mod top_two;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::history::AllocationHistory;
use crate::instance::ProblemInstance;
use crate::posterior::{Posterior, PosteriorError};
use crate::rng::SimRng;

pub use analytic::{analytic_policy_prob, PolicyProbabilities, MAX_ANALYTIC_CONTEXTS, MAX_ANALYTIC_FUNCTIONS};
pub use equal::EqualAllocation;
pub use kkt_tracking::{candidate_triple, AoaMc, BoldMc, CandidateTriple};
pub use selection::{select_final, SelectionMode, DEFAULT_BAYES_DRAWS};
pub use top_two::{tuned_gamma, FallbackRule, GammaRule, TopTwo, DEFAULT_RESAMPLE_CAP, DEFAULT_TUNE_SCHEDULE};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("unknown policy {name:?}; valid policies: {valid}")]
    UnknownPolicy { name: String, valid: String },
    #[error("policy configuration: {0}")]
    Config(String),
    #[error("no disagreeing posterior draw within {cap} re-draws and the fallback is disabled")]
    ResampleExhausted { cap: usize },
    #[error("design {design} has {count} samples; at least 2 are needed for a sample variance")]
    UndefinedVariance { design: usize, count: u64 },
    #[error("analytic policy probabilities: {0}")]
    Analytic(String),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
}

/// Everything a policy may look at when choosing the next sample.
pub struct StepContext<'a> {
    pub instance: &'a ProblemInstance,
    pub posterior: &'a mut dyn Posterior,
    pub history: &'a AllocationHistory,
    pub rng: &'a mut SimRng,
}

/// The outcome of one policy step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StepDecision {
    pub context: usize,
    /// Global design index; always inside `context`.
    pub design: usize,
    /// Posterior re-draws spent looking for a disagreeing draw.
    pub resamples_used: usize,
    /// The re-draw cap was hit and the fallback rule chose the sample.
    pub fallback: bool,
    /// A tie among sampled means had to be broken by design order.
    pub tie: bool,
}

impl StepDecision {
    pub fn plain(context: usize, design: usize) -> Self {
        StepDecision { context, design, resamples_used: 0, fallback: false, tie: false }
    }
}

pub trait Policy: Send {
    /// Registry name of the policy kind.
    fn kind(&self) -> &'static str;

    fn step(&mut self, ctx: StepContext<'_>) -> Result<StepDecision, PolicyError>;

    /// Current per-context exploitation weight, for policies that have one.
    fn gamma(&self) -> Option<&[f64]> {
        None
    }

    /// Number of non-fatal problems so far (e.g. failed gamma re-solves).
    fn warnings(&self) -> usize {
        0
    }
}

/// A configured policy: kind, display label, posterior model and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub name: String,
    /// Label used in outputs; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Posterior model; defaults to the natural model of the instance family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub model_params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

impl PolicySpec {
    pub fn new(name: &str) -> Self {
        PolicySpec { name: name.to_string(), label: None, model: None, model_params: Map::new(), params: Map::new() }
    }

    pub fn with_param(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_model(mut self, model: &str) -> Self {
        self.model = Some(model.to_string());
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

pub type PolicyFactory =
    Arc<dyn Fn(&ProblemInstance, &Map<String, Value>) -> Result<Box<dyn Policy>, PolicyError> + Send + Sync>;

/// Name-indexed constructors of policies.
#[derive(Clone)]
pub struct PolicyRegistry {
    entries: BTreeMap<String, PolicyFactory>,
}

impl PolicyRegistry {
    pub fn empty() -> Self {
        PolicyRegistry { entries: BTreeMap::new() }
    }

    /// Registry holding `tttsc-coin`, `tttsc-tune`, `ea`, `boldmc` and `aoamc`.
    pub fn with_defaults() -> Self {
        let mut reg = Self::empty();
        reg.register("tttsc-coin", Arc::new(top_two::build_coin));
        reg.register("tttsc-tune", Arc::new(top_two::build_tune));
        reg.register("ea", Arc::new(equal::build));
        reg.register("boldmc", Arc::new(kkt_tracking::build_bold));
        reg.register("aoamc", Arc::new(kkt_tracking::build_aoa));
        reg
    }

    pub fn register(&mut self, name: &str, factory: PolicyFactory) {
        self.entries.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn build(&self, spec: &PolicySpec, instance: &ProblemInstance) -> Result<Box<dyn Policy>, PolicyError> {
        let factory = self.entries.get(&spec.name).ok_or_else(|| PolicyError::UnknownPolicy {
            name: spec.name.clone(),
            valid: self.names().join(", "),
        })?;
        factory(instance, &spec.params)
    }
}

impl Default for PolicyRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

pub(crate) fn reject_unknown_keys(params: &Map<String, Value>, allowed: &[&str]) -> Result<(), PolicyError> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(PolicyError::Config(format!(
            "unknown key {k:?} (allowed: {})",
            if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") }
        ))),
        None => Ok(()),
    }
}

pub(crate) fn parse_param<T: serde::de::DeserializeOwned>(
    params: &Map<String, Value>,
    key: &str,
) -> Result<Option<T>, PolicyError> {
    params
        .get(key)
        .map(|v| serde_json::from_value(v.clone()).map_err(|e| PolicyError::Config(format!("{key}: {e}"))))
        .transpose()
}
