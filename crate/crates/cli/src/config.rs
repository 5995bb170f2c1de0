//! The JSON experiment configuration accepted by `cttts run`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use cttts_core::harness::{log_spaced_checkpoints, ExperimentConfig, Registries, DEFAULT_CHECKPOINT_COUNT};
use cttts_core::instance::{
    generate_gaussian_instance, generate_weibull_instance_with_tau, Family, InstanceFile, ProblemInstance,
    DEFAULT_WEIBULL_TAU, GAUSSIAN_THETA_BOX,
};
use cttts_core::policy::{PolicySpec, SelectionMode};

use crate::error::CliError;

/// Instance generators available from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Random Gaussian instance: `mu ~ N(0, 10)`, `sigma ~ U[4, 6]`.
    Gaussian,
    /// Gaussian instance whose design means are `0, spacing, 2 spacing, ...`
    /// in every context, all with standard deviation `sigma`.
    GaussianSpaced,
    /// Random censored-Weibull instance with context sizes (5, 5, 7, 6, 7).
    Weibull,
}

/// Where the instance comes from: exactly one of `generator`, `path` and
/// `inline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contexts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<Value>,
}

/// Top-level configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub instance: InstanceSpec,
    pub policies: Vec<PolicySpec>,
    pub budget: u64,
    #[serde(default = "default_init")]
    pub init_per_design: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub selection: SelectionMode,
    /// CSV output path; metadata goes next to it with extension `.meta.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_init() -> u64 {
    10
}

fn default_reps() -> usize {
    100
}

fn default_parallelism() -> usize {
    1
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub budget: Option<u64>,
    pub parallelism: Option<usize>,
}

/// Environment variable that overrides every other parallelism setting.
pub const THREADS_ENV: &str = "CTTTS_THREADS";

/// Parses a JSON document, reporting line and column on syntax errors.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!("{origin}: line {}, column {}: {e}", e.line(), e.column()))
    })
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        parse_json(&text, &path.display().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(reps) = o.reps {
            self.reps = reps;
        }
        if let Some(budget) = o.budget {
            self.budget = budget;
        }
        if let Some(p) = o.parallelism {
            self.parallelism = p;
        }
        if let Ok(v) = std::env::var(THREADS_ENV) {
            self.parallelism = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
        }
        Ok(())
    }

    /// Instance, resolved experiment and the validated registries' view.
    /// Relative instance paths are taken relative to `base`.
    pub fn resolve(
        &self,
        base: &Path,
        registries: &Registries,
    ) -> Result<(ProblemInstance, ExperimentConfig), CliError> {
        let instance = self.instance.build(base)?;
        let start = self.init_per_design * instance.n_designs() as u64;
        let experiment = ExperimentConfig {
            policies: self.policies.clone(),
            budget: self.budget,
            init_per_design: self.init_per_design,
            checkpoints: self
                .checkpoints
                .clone()
                .unwrap_or_else(|| log_spaced_checkpoints(start, self.budget, DEFAULT_CHECKPOINT_COUNT)),
            reps: self.reps,
            seed: self.seed,
            weights: self
                .weights
                .clone()
                .unwrap_or_else(|| vec![1.0 / instance.n_contexts() as f64; instance.n_contexts()]),
            parallelism: self.parallelism,
            selection: self.selection,
        };
        experiment.validate(&instance).map_err(|e| CliError::Config(e.to_string()))?;
        for spec in &experiment.policies {
            registries.policies.build(spec, &instance).map_err(|e| CliError::Config(e.to_string()))?;
            let model = spec.model.as_deref().unwrap_or(cttts_core::harness::default_model(instance.family()));
            registries
                .posteriors
                .build(model, &instance, &spec.model_params)
                .map_err(|e| CliError::Config(format!("policy {:?}: {e}", spec.label())))?;
        }
        Ok((instance, experiment))
    }
}

impl InstanceSpec {
    pub fn build(&self, base: &Path) -> Result<ProblemInstance, CliError> {
        let bad = |msg: String| CliError::Config(format!("instance: {msg}"));
        let sources = [self.generator.is_some(), self.path.is_some(), self.inline.is_some()];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(bad("give exactly one of generator, path, inline".into()));
        }
        let generator_keys = [
            ("seed", self.seed.is_some()),
            ("contexts", self.contexts.is_some()),
            ("designs", self.designs.is_some()),
            ("m", self.m.is_some()),
            ("spacing", self.spacing.is_some()),
            ("sigma", self.sigma.is_some()),
            ("tau", self.tau.is_some()),
        ];
        let allowed: &[&str] = match self.generator {
            None => &[],
            Some(Generator::Gaussian) => &["seed", "contexts", "designs", "m"],
            Some(Generator::GaussianSpaced) => &["contexts", "designs", "m", "spacing", "sigma"],
            Some(Generator::Weibull) => &["seed", "tau"],
        };
        if let Some((k, _)) = generator_keys.iter().find(|(k, set)| *set && !allowed.contains(k)) {
            return Err(bad(format!("key {k:?} does not apply to this source")));
        }
        let err = |e: cttts_core::instance::InstanceError| bad(e.to_string());
        match self.generator {
            Some(Generator::Gaussian) => generate_gaussian_instance(
                self.seed.unwrap_or(0),
                self.contexts.unwrap_or(10),
                self.designs.unwrap_or(50),
                self.m.unwrap_or(1),
            )
            .map_err(err),
            Some(Generator::GaussianSpaced) => {
                let (nc, nd) = (self.contexts.unwrap_or(3), self.designs.unwrap_or(5));
                let (spacing, sigma) = (self.spacing.unwrap_or(1.0), self.sigma.unwrap_or(5.0));
                if nd == 0 || !(spacing > 0.0 && sigma > 0.0) {
                    return Err(bad("gaussian-spaced needs designs >= 1, spacing > 0, sigma > 0".into()));
                }
                let params = (0..nc).map(|_| (0..nd).map(|j| (j as f64 * spacing, sigma * sigma)).collect()).collect();
                ProblemInstance::new(Family::Gaussian, params, vec![self.m.unwrap_or(1); nc], None, GAUSSIAN_THETA_BOX)
                    .map_err(err)
            }
            Some(Generator::Weibull) => {
                generate_weibull_instance_with_tau(self.seed.unwrap_or(0), self.tau.unwrap_or(DEFAULT_WEIBULL_TAU))
                    .map_err(err)
            }
            None => match (&self.path, &self.inline) {
                (Some(p), _) => {
                    let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
                    let file: InstanceFile = parse_json(&text, &path.display().to_string())?;
                    ProblemInstance::try_from(file).map_err(err)
                }
                (None, Some(v)) => {
                    let file: InstanceFile =
                        serde_json::from_value(v.clone()).map_err(|e| bad(format!("inline: {e}")))?;
                    ProblemInstance::try_from(file).map_err(err)
                }
                (None, None) => unreachable!("one source is set"),
            },
        }
    }
}
