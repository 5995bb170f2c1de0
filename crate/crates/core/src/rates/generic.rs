//! Rates defined by minimizing over a common crossing value:
//!
//! `G(x, y) = min_{m in [mu_dp, mu_d]} x h_d(m) + y h_dp(m)`,
//!
//! where the profile `h(m)` is the divergence from the true parameters to the
//! closest parameters with mean `m`, minimized over the nuisance parameter.

use std::sync::Arc;

use serde_json::{Map, Value};

use super::{optional_f64, pair, reject_unknown, Partials, RateError, RateFunction, SharedRate};
use crate::kl::kl_weibull_censored;
use crate::optimize::{brent_min, grid_brent_min};

/// Shapes searched when profiling a censored-Weibull divergence.
pub const WEIBULL_SHAPE_RANGE: [f64; 2] = [0.1, 20.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFamily {
    GaussianKnownVar,
    GaussianUnknownVar,
    WeibullCensored { tau: f64 },
}

/// Divergence profile of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `(mu - m)^2 / var`, the scale at which the crossing form reproduces
    /// the closed-form known-variance rate.
    KnownVar { mu: f64, var: f64 },
    /// `1/2 ln((var + (mu - m)^2) / var)`: the Gaussian divergence minimized
    /// over the variance.
    UnknownVar { mu: f64, var: f64 },
    /// Censored-Weibull divergence minimized over the shape in `k_range`.
    Weibull { mu: f64, k: f64, tau: f64, k_range: [f64; 2] },
}

impl Profile {
    pub fn mu(&self) -> f64 {
        match *self {
            Profile::KnownVar { mu, .. } | Profile::UnknownVar { mu, .. } | Profile::Weibull { mu, .. } => mu,
        }
    }

    pub fn eval(&self, m: f64) -> f64 {
        match *self {
            Profile::KnownVar { mu, var } => (mu - m).powi(2) / var,
            Profile::UnknownVar { mu, var } => 0.5 * ((var + (mu - m).powi(2)) / var).ln(),
            Profile::Weibull { mu, k, tau, k_range } => {
                if m == mu {
                    return 0.0;
                }
                // The divergence is unimodal in the shape; searching in ln k
                // makes small and large shapes equally resolved.
                let f = |ln_k2: f64| kl_weibull_censored(mu, k, m, ln_k2.exp(), tau).unwrap_or(f64::INFINITY);
                grid_brent_min(f, k_range[0].ln(), k_range[1].ln(), 8, 1e-10).1
            }
        }
    }

    fn new(family: RateFamily, mu: f64, eta: f64) -> Result<Self, RateError> {
        if !(mu.is_finite() && eta > 0.0 && eta.is_finite()) {
            return Err(RateError::Invalid(format!("parameters ({mu}, {eta}) out of range")));
        }
        Ok(match family {
            RateFamily::GaussianKnownVar => Profile::KnownVar { mu, var: eta },
            RateFamily::GaussianUnknownVar => Profile::UnknownVar { mu, var: eta },
            RateFamily::WeibullCensored { tau } => {
                if !(tau > 0.0) || mu <= 0.0 {
                    return Err(RateError::Invalid(format!("weibull needs mu > 0 and tau > 0 (mu {mu}, tau {tau})")));
                }
                Profile::Weibull { mu, k: eta, tau, k_range: WEIBULL_SHAPE_RANGE }
            }
        })
    }
}

/// Crossing-form rate between a preferred and an undesired design.
#[derive(Debug, Clone)]
pub struct GenericRate {
    name: &'static str,
    d: Profile,
    dp: Profile,
    n_grid: usize,
    tol: f64,
}

impl GenericRate {
    /// `theta = (mu, eta)` in the instance parameterization (`eta` is the
    /// variance for Gaussian families and the shape for Weibull).
    pub fn new(family: RateFamily, theta_d: (f64, f64), theta_dp: (f64, f64)) -> Result<Self, RateError> {
        if theta_d.0 <= theta_dp.0 {
            return Err(RateError::Order { mu_d: theta_d.0, mu_dp: theta_dp.0 });
        }
        let d = Profile::new(family, theta_d.0, theta_d.1)?;
        let dp = Profile::new(family, theta_dp.0, theta_dp.1)?;
        let gap = theta_d.0 - theta_dp.0;
        let (name, n_grid, tol) = match family {
            RateFamily::GaussianKnownVar => ("gaussian-known-var", 9, 1e-12 * gap),
            RateFamily::GaussianUnknownVar => ("gaussian-unknown-var", 17, 1e-12 * gap),
            RateFamily::WeibullCensored { .. } => ("weibull-censored", 9, 1e-6),
        };
        Ok(GenericRate { name, d, dp, n_grid, tol })
    }

    fn objective(&self, x: f64, y: f64) -> impl Fn(f64) -> f64 + '_ {
        move |m| x * self.d.eval(m) + y * self.dp.eval(m)
    }

    fn argmin(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        if x <= 0.0 || y <= 0.0 {
            return None;
        }
        let (lo, hi) = (self.dp.mu(), self.d.mu());
        let f = self.objective(x, y);
        let coarse = grid_brent_min(&f, lo, hi, self.n_grid, self.tol);
        // A second pass from the refined bracket tightens flat minima.
        let (a, b) = ((coarse.0 - 2.0 * self.tol).max(lo), (coarse.0 + 2.0 * self.tol).min(hi));
        let fine = brent_min(&f, a, b, self.tol * 1e-3);
        Some(if fine.1 < coarse.1 { fine } else { coarse })
    }
}

impl RateFunction for GenericRate {
    fn name(&self) -> &'static str {
        self.name
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        self.argmin(x, y).map_or(0.0, |(_, v)| v.max(0.0))
    }

    fn crossing(&self, x: f64, y: f64) -> Option<f64> {
        self.argmin(x, y).map(|(m, _)| m)
    }

    /// Envelope theorem: the partials are the profiles at the minimizer.
    fn partials(&self, x: f64, y: f64) -> Partials {
        match self.argmin(x, y) {
            Some((m, _)) => Partials { dx: self.d.eval(m), dy: self.dp.eval(m), kink: false },
            None => Partials { dx: 0.0, dy: 0.0, kink: true },
        }
    }
}

/// One-shot evaluation of the crossing-form rate.
pub fn rate_generic(
    psi_d: f64,
    psi_dp: f64,
    theta_d: (f64, f64),
    theta_dp: (f64, f64),
    family: RateFamily,
) -> Result<f64, RateError> {
    if psi_d <= 0.0 && psi_dp <= 0.0 {
        return Ok(0.0);
    }
    Ok(GenericRate::new(family, theta_d, theta_dp)?.value(psi_d, psi_dp))
}

pub(super) fn build(params: &Map<String, Value>, kind: &str) -> Result<SharedRate, RateError> {
    let (family, eta_key) = if kind == "weibull-censored" {
        reject_unknown(params, &["mu", "k", "tau"])?;
        let tau = optional_f64(params, "tau")?.unwrap_or(f64::INFINITY);
        (RateFamily::WeibullCensored { tau }, "k")
    } else {
        reject_unknown(params, &["mu", "var"])?;
        (RateFamily::GaussianUnknownVar, "var")
    };
    let [mu_d, mu_dp] = pair(params, "mu")?;
    let [eta_d, eta_dp] = pair(params, eta_key)?;
    Ok(Arc::new(GenericRate::new(family, (mu_d, eta_d), (mu_dp, eta_dp))?))
}
