//! Rates with closed forms.

use std::sync::Arc;

use serde_json::{Map, Value};

use super::{pair, reject_unknown, Partials, RateError, RateFunction, SharedRate};

/// `(mu_d - mu_dp)^2 / (var_d/x + var_dp/y)`, zero when either allocation is zero.
pub fn rate_gaussian_known_var(psi_d: f64, psi_dp: f64, mu_d: f64, mu_dp: f64, var_d: f64, var_dp: f64) -> f64 {
    if psi_d <= 0.0 || psi_dp <= 0.0 {
        return 0.0;
    }
    let d = mu_d - mu_dp;
    d * d * psi_d * psi_dp / (var_d * psi_dp + var_dp * psi_d)
}

/// Gaussian designs with known variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKnownVar {
    pub mu_d: f64,
    pub mu_dp: f64,
    pub var_d: f64,
    pub var_dp: f64,
}

impl GaussianKnownVar {
    pub fn new(mu_d: f64, mu_dp: f64, var_d: f64, var_dp: f64) -> Result<Self, RateError> {
        if !(var_d > 0.0 && var_dp > 0.0) {
            return Err(RateError::Invalid(format!("variances must be positive, got ({var_d}, {var_dp})")));
        }
        if !(mu_d.is_finite() && mu_dp.is_finite()) {
            return Err(RateError::Invalid("means must be finite".into()));
        }
        Ok(GaussianKnownVar { mu_d, mu_dp, var_d, var_dp })
    }

    fn gap2(&self) -> f64 {
        (self.mu_d - self.mu_dp).powi(2)
    }
}

impl RateFunction for GaussianKnownVar {
    fn name(&self) -> &'static str {
        "gaussian-known-var"
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        rate_gaussian_known_var(x, y, self.mu_d, self.mu_dp, self.var_d, self.var_dp)
    }

    fn crossing(&self, x: f64, y: f64) -> Option<f64> {
        if x <= 0.0 || y <= 0.0 {
            return None;
        }
        // Minimizer of x (mu_d - m)^2/var_d + y (m - mu_dp)^2/var_dp.
        let (a, b) = (x / self.var_d, y / self.var_dp);
        Some((a * self.mu_d + b * self.mu_dp) / (a + b))
    }

    fn partials(&self, x: f64, y: f64) -> Partials {
        let den = (self.var_d * y + self.var_dp * x).powi(2);
        Partials {
            dx: self.gap2() * self.var_d * y * y / den,
            dy: self.gap2() * self.var_dp * x * x / den,
            kink: false,
        }
    }

    fn inverse(&self, x: f64, z: f64, y_max: f64) -> Option<f64> {
        if z <= 0.0 {
            return Some(0.0);
        }
        let den = self.gap2() * x - z * self.var_d;
        if den <= 0.0 {
            return None;
        }
        let y = z * self.var_dp * x / den;
        (y <= y_max).then_some(y)
    }
}

/// `2 / (1/x + 1/y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic;

impl RateFunction for Harmonic {
    fn name(&self) -> &'static str {
        "harmonic"
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        if x <= 0.0 || y <= 0.0 {
            0.0
        } else {
            2.0 * x * y / (x + y)
        }
    }

    fn partials(&self, x: f64, y: f64) -> Partials {
        let s2 = (x + y).powi(2);
        Partials { dx: 2.0 * y * y / s2, dy: 2.0 * x * x / s2, kink: false }
    }

    fn inverse(&self, x: f64, z: f64, y_max: f64) -> Option<f64> {
        if z <= 0.0 {
            return Some(0.0);
        }
        let den = 2.0 * x - z;
        if den <= 0.0 {
            return None;
        }
        let y = z * x / den;
        (y <= y_max).then_some(y)
    }
}

/// `min(x, y)`: concave and homogeneous but flat in `y` once `y > x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinRate;

impl RateFunction for MinRate {
    fn name(&self) -> &'static str {
        "min"
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        x.min(y).max(0.0)
    }

    fn partials(&self, x: f64, y: f64) -> Partials {
        if x < y {
            Partials { dx: 1.0, dy: 0.0, kink: false }
        } else if y < x {
            Partials { dx: 0.0, dy: 1.0, kink: false }
        } else {
            Partials { dx: 0.5, dy: 0.5, kink: true }
        }
    }

    fn inverse(&self, x: f64, z: f64, y_max: f64) -> Option<f64> {
        if z <= 0.0 {
            return Some(0.0);
        }
        (z <= x && z <= y_max).then_some(z)
    }
}

pub(super) fn build_known_var(params: &Map<String, Value>) -> Result<SharedRate, RateError> {
    reject_unknown(params, &["mu", "var"])?;
    let [mu_d, mu_dp] = pair(params, "mu")?;
    let [var_d, var_dp] = pair(params, "var")?;
    if mu_d <= mu_dp {
        return Err(RateError::Order { mu_d, mu_dp });
    }
    Ok(Arc::new(GaussianKnownVar::new(mu_d, mu_dp, var_d, var_dp)?))
}

pub(super) fn build_parameterless(params: &Map<String, Value>, rate: SharedRate) -> Result<SharedRate, RateError> {
    reject_unknown(params, &[])?;
    Ok(rate)
}
