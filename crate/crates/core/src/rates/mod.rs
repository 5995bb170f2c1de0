//! Posterior large-deviations rate functions `G(x, y)` of a preferred design
//! (allocation `x`) against an undesired one (allocation `y`).
//!
//! Every rate is concave, nondecreasing in each argument and positively
//! homogeneous of degree one. Rates are trait objects so that allocation
//! solvers can mix closed forms with numerically minimized ones; a
//! [`RateRegistry`] builds them by name from JSON parameters.

mod closed_form;
mod generic;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::optimize::bisect_threshold;

pub use closed_form::{rate_gaussian_known_var, GaussianKnownVar, Harmonic, MinRate};
pub use generic::{rate_generic, GenericRate, Profile, RateFamily, WEIBULL_SHAPE_RANGE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("unknown rate type {name:?}; valid types: {valid}")]
    Unknown { name: String, valid: String },
    #[error("invalid rate parameters: {0}")]
    Invalid(String),
    #[error("preferred design must have the larger mean (got {mu_d} <= {mu_dp})")]
    Order { mu_d: f64, mu_dp: f64 },
}

/// Partial derivatives of a rate at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Partials {
    pub dx: f64,
    pub dy: f64,
    /// One-sided differences disagree: the rate is not differentiable here.
    pub kink: bool,
}

pub trait RateFunction: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn value(&self, x: f64, y: f64) -> f64;

    /// Crossing value of the performance parameter attaining the infimum,
    /// for rates defined through one.
    fn crossing(&self, _x: f64, _y: f64) -> Option<f64> {
        None
    }

    /// Partial derivatives; central differences with step `1e-6` times the
    /// argument by default.
    fn partials(&self, x: f64, y: f64) -> Partials {
        let hx = 1e-6 * x.abs().max(1e-12);
        let hy = 1e-6 * y.abs().max(1e-12);
        let f0 = self.value(x, y);
        let fx_plus = self.value(x + hx, y);
        let fx_minus = self.value(x - hx, y);
        let fy_plus = self.value(x, y + hy);
        let fy_minus = self.value(x, y - hy);
        let one_sided_disagree = |plus: f64, minus: f64, h: f64| {
            let fwd = (plus - f0) / h;
            let bwd = (f0 - minus) / h;
            (fwd - bwd).abs() > 1e-3 * (fwd.abs() + bwd.abs()) + 1e-9
        };
        Partials {
            dx: (fx_plus - fx_minus) / (2.0 * hx),
            dy: (fy_plus - fy_minus) / (2.0 * hy),
            kink: one_sided_disagree(fx_plus, fx_minus, hx) || one_sided_disagree(fy_plus, fy_minus, hy),
        }
    }

    /// Smallest `y` in `[0, y_max]` with `value(x, y) >= z`, or `None` when
    /// even `y_max` falls short. Bisection by default.
    fn inverse(&self, x: f64, z: f64, y_max: f64) -> Option<f64> {
        if z <= 0.0 {
            return Some(0.0);
        }
        if self.value(x, y_max) < z {
            return None;
        }
        Some(bisect_threshold(|y| self.value(x, y) >= z, 0.0, y_max))
    }
}

pub type SharedRate = Arc<dyn RateFunction>;

pub type RateFactory = Arc<dyn Fn(&Map<String, Value>) -> Result<SharedRate, RateError> + Send + Sync>;

/// Name-indexed constructors of rate functions.
#[derive(Clone)]
pub struct RateRegistry {
    entries: BTreeMap<String, RateFactory>,
}

impl RateRegistry {
    pub fn empty() -> Self {
        RateRegistry { entries: BTreeMap::new() }
    }

    /// Registry with `gaussian-known-var`, `gaussian-unknown-var`,
    /// `weibull-censored`, `harmonic` and `min`.
    pub fn with_defaults() -> Self {
        let mut reg = Self::empty();
        reg.register("gaussian-known-var", Arc::new(|p| closed_form::build_known_var(p)));
        reg.register("gaussian-unknown-var", Arc::new(|p| generic::build(p, "gaussian-unknown-var")));
        reg.register("weibull-censored", Arc::new(|p| generic::build(p, "weibull-censored")));
        reg.register("harmonic", Arc::new(|p| closed_form::build_parameterless(p, Arc::new(Harmonic))));
        reg.register("min", Arc::new(|p| closed_form::build_parameterless(p, Arc::new(MinRate))));
        reg
    }

    pub fn register(&mut self, name: &str, factory: RateFactory) {
        self.entries.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    /// Builds the rate described by a JSON object whose `type` key names the
    /// registered rate; remaining keys are its parameters.
    pub fn build(&self, spec: &Value) -> Result<SharedRate, RateError> {
        let obj = spec.as_object().ok_or_else(|| RateError::Invalid("rate spec must be a JSON object".into()))?;
        let name = obj
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| RateError::Invalid("rate spec needs a string \"type\"".into()))?;
        let factory = self.entries.get(name).ok_or_else(|| RateError::Unknown {
            name: name.to_string(),
            valid: self.names().join(", "),
        })?;
        let mut params = obj.clone();
        params.remove("type");
        factory(&params)
    }
}

impl Default for RateRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

pub(crate) fn reject_unknown(params: &Map<String, Value>, allowed: &[&str]) -> Result<(), RateError> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(RateError::Invalid(format!("unknown key {k:?} (allowed: {})", allowed.join(", ")))),
        None => Ok(()),
    }
}

pub(crate) fn pair(params: &Map<String, Value>, key: &str) -> Result<[f64; 2], RateError> {
    let v = params.get(key).ok_or_else(|| RateError::Invalid(format!("missing {key:?}")))?;
    serde_json::from_value(v.clone()).map_err(|e| RateError::Invalid(format!("{key}: {e}")))
}

pub(crate) fn optional_f64(params: &Map<String, Value>, key: &str) -> Result<Option<f64>, RateError> {
    params
        .get(key)
        .map(|v| v.as_f64().ok_or_else(|| RateError::Invalid(format!("{key} must be a number"))))
        .transpose()
}
