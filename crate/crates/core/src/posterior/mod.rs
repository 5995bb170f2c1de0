//! Per-design posterior beliefs.
//!
//! A [`Posterior`] covers every design of an instance; designs are a priori
//! independent, so a joint draw is a product of per-design draws. Models are
//! registered by name in a [`PosteriorRegistry`] and chosen at runtime.

mod categorical;
mod normal_gamma;
mod weibull_grid;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::instance::ProblemInstance;
use crate::rng::SimRng;

pub use categorical::CategoricalBest;
pub use normal_gamma::{
    ng_posterior, NormalGammaModel, NormalGammaState, DEFAULT_NG_PRIOR, DEFAULT_REJECTION_BUDGET,
};
pub use weibull_grid::{weibull_log_lik, GridSpec, WeibullGridModel};

#[derive(Debug, Error)]
pub enum PosteriorError {
    #[error("rejection budget of {budget} draws exhausted for design {design}: posterior mass outside theta_box")]
    RejectionExhausted { design: usize, budget: usize },
    #[error("design {0} has no parameter node with finite weight")]
    NoFiniteWeight(usize),
    #[error("observation {value} is invalid for design {design}: {reason}")]
    BadObservation { design: usize, value: f64, reason: &'static str },
    #[error("unknown posterior model {name:?}; valid models: {valid}")]
    UnknownModel { name: String, valid: String },
    #[error("posterior configuration: {0}")]
    Config(String),
}

/// A single posterior draw of one design's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterDraw {
    pub mu: f64,
    pub eta: f64,
}

/// Posterior summary of one design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    /// Posterior mean of the performance parameter.
    pub mean_mu: f64,
    /// Posterior variance of the performance parameter.
    pub var_mu: f64,
    /// Plug-in variance of a single observation.
    pub obs_var: f64,
}

pub trait Posterior: Send {
    /// Registry name of the model.
    fn model(&self) -> &'static str;

    fn n_designs(&self) -> usize;

    fn observe(&mut self, design: usize, value: f64) -> Result<(), PosteriorError>;

    fn sample(&mut self, design: usize, rng: &mut SimRng) -> Result<ParameterDraw, PosteriorError>;

    /// Fresh joint draw of the performance parameter of every design.
    fn sample_mu_into(&mut self, rng: &mut SimRng, out: &mut [f64]) -> Result<(), PosteriorError> {
        for (g, slot) in out.iter_mut().enumerate() {
            *slot = self.sample(g, rng)?.mu;
        }
        Ok(())
    }

    fn moments(&mut self, design: usize) -> Moments;

    /// Debug view of the state. Not a stable format.
    fn snapshot(&mut self) -> Value;
}

pub type PosteriorFactory =
    Arc<dyn Fn(&ProblemInstance, &Map<String, Value>) -> Result<Box<dyn Posterior>, PosteriorError> + Send + Sync>;

/// Name-indexed constructors of posterior models.
#[derive(Clone)]
pub struct PosteriorRegistry {
    entries: BTreeMap<String, PosteriorFactory>,
}

impl PosteriorRegistry {
    pub fn empty() -> Self {
        PosteriorRegistry { entries: BTreeMap::new() }
    }

    /// Registry holding the shipped models `normal-gamma` and `weibull-grid`.
    pub fn with_defaults() -> Self {
        let mut reg = Self::empty();
        reg.register("normal-gamma", Arc::new(normal_gamma::build));
        reg.register("weibull-grid", Arc::new(weibull_grid::build));
        reg
    }

    pub fn register(&mut self, name: &str, factory: PosteriorFactory) {
        self.entries.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn build(
        &self,
        name: &str,
        instance: &ProblemInstance,
        params: &Map<String, Value>,
    ) -> Result<Box<dyn Posterior>, PosteriorError> {
        let factory = self.entries.get(name).ok_or_else(|| PosteriorError::UnknownModel {
            name: name.to_string(),
            valid: self.names().join(", "),
        })?;
        factory(instance, params)
    }
}

impl Default for PosteriorRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

pub(crate) fn reject_unknown_keys(params: &Map<String, Value>, allowed: &[&str]) -> Result<(), PosteriorError> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(PosteriorError::Config(format!(
            "unknown key {k:?} (allowed: {})",
            allowed.join(", ")
        ))),
        None => Ok(()),
    }
}

pub(crate) fn parse_param<T: serde::de::DeserializeOwned>(
    params: &Map<String, Value>,
    key: &str,
) -> Result<Option<T>, PosteriorError> {
    params
        .get(key)
        .map(|v| serde_json::from_value(v.clone()).map_err(|e| PosteriorError::Config(format!("{key}: {e}"))))
        .transpose()
}
