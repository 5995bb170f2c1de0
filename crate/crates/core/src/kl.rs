//! Kullback–Leibler divergences `D(theta1 || theta2)` of the two observation
//! families.

use thiserror::Error;

use crate::instance::weibull_scale_for_mean;
use crate::quadrature::{integrate, QuadratureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KlError {
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("invalid Weibull parameters: {0}")]
    InvalidWeibull(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Absolute tolerance of the censored-Weibull quadrature.
pub const KL_QUAD_TOL: f64 = 1e-8;

/// `D(N(mu1, var1) || N(mu2, var2)) = ln(s2/s1) + (s1^2 + (mu1-mu2)^2)/(2 s2^2) - 1/2`.
pub fn kl_gaussian(mu1: f64, var1: f64, mu2: f64, var2: f64) -> Result<f64, KlError> {
    for v in [var1, var2] {
        if !(v > 0.0) {
            return Err(KlError::NonPositiveVariance(v));
        }
    }
    let d = mu1 - mu2;
    Ok(0.5 * (var2 / var1).ln() + (var1 + d * d) / (2.0 * var2) - 0.5)
}

/// Censored-Weibull divergence with both parameters given as `(mean, shape)`.
pub fn kl_weibull_censored(mu1: f64, k1: f64, mu2: f64, k2: f64, tau: f64) -> Result<f64, KlError> {
    for (mu, k) in [(mu1, k1), (mu2, k2)] {
        if !(mu > 0.0 && k > 0.0) {
            return Err(KlError::InvalidWeibull(format!("mean {mu}, shape {k}")));
        }
    }
    kl_weibull_censored_native(weibull_scale_for_mean(mu1, k1), k1, weibull_scale_for_mean(mu2, k2), k2, tau)
}

fn check_native(rho1: f64, k1: f64, rho2: f64, k2: f64) -> Result<(), KlError> {
    for (r, k) in [(rho1, k1), (rho2, k2)] {
        if !(r > 0.0 && k > 0.0 && r.is_finite() && k.is_finite()) {
            return Err(KlError::InvalidWeibull(format!("scale {r}, shape {k}")));
        }
    }
    Ok(())
}

/// Divergence between Weibull laws with scales `rho` and shapes `k`, both
/// right-censored at `tau` (`tau = inf` means no censoring):
///
/// `∫_0^tau f1 ln(f1/f2) dy + S1(tau) ln(S1(tau)/S2(tau))`.
///
/// In `u = (y/rho1)^k1` (so `f1 dy = e^-u du`) the log-likelihood ratio is
/// `a + b ln u - u + s u^r` with `r = k2/k1`, and the integral over
/// `[0, U1]` reduces to `a P + b L - M + s γ(1 + r, U1)` with
/// `P = 1 - e^-U`, `M = 1 - e^-U (1 + U)` and
/// `L = ∫_0^U e^-u ln u du = -e^-U ln U - γ_E - E1(U)`. The censored atom
/// contributes `e^-U1 (U2 - U1)` with `Ui = (tau/rho_i)^k_i`.
pub fn kl_weibull_censored_native(rho1: f64, k1: f64, rho2: f64, k2: f64, tau: f64) -> Result<f64, KlError> {
    check_native(rho1, k1, rho2, k2)?;
    if !(tau > 0.0) {
        return if tau == 0.0 { Ok(0.0) } else { Err(KlError::InvalidWeibull(format!("tau {tau}"))) };
    }
    if tau.is_infinite() {
        return Ok(kl_weibull_uncensored_native(rho1, k1, rho2, k2).max(0.0));
    }
    const EULER: f64 = 0.577_215_664_901_532_9;
    let ln_ratio = (rho1 / rho2).ln();
    let a = k1.ln() - rho1.ln() - k2.ln() + rho2.ln() - (k2 - 1.0) * ln_ratio;
    let b = (k1 - k2) / k1;
    let r = k2 / k1;
    let u1 = (tau / rho1).powf(k1);
    let e = (-u1).exp();
    let p = -(-u1).exp_m1();
    let m = p - e * u1;
    let l = if u1 > 0.0 {
        let e1 = statrs::function::exponential::integral(u1, 1)
            .ok_or_else(|| KlError::InvalidWeibull(format!("exponential integral at {u1}")))?;
        -e * u1.ln() - EULER - e1
    } else {
        0.0
    };
    let lower = statrs::function::gamma::gamma_lr(1.0 + r, u1);
    let power = if lower > 0.0 {
        (k2 * ln_ratio + statrs::function::gamma::ln_gamma(1.0 + r) + lower.ln()).exp()
    } else {
        0.0
    };
    let integral = a * p + b * l - m + power;
    let u2 = (tau / rho2).powf(k2);
    let atom = e * (u2 - u1);
    Ok((integral + if atom.is_finite() { atom } else { 0.0 }).max(0.0))
}

/// The same divergence by adaptive quadrature, in `u = (y/rho1)^k1` and
/// then `u = w^4` to remove the logarithmic singularity at zero. Slower;
/// kept as an independent check of the closed form.
pub fn kl_weibull_censored_quadrature(rho1: f64, k1: f64, rho2: f64, k2: f64, tau: f64) -> Result<f64, KlError> {
    check_native(rho1, k1, rho2, k2)?;
    if !(tau > 0.0) {
        return if tau == 0.0 { Ok(0.0) } else { Err(KlError::InvalidWeibull(format!("tau {tau}"))) };
    }
    let u1 = (tau / rho1).powf(k1);
    let ln_ratio = (rho1 / rho2).ln();
    let c0 = k1.ln() - rho1.ln() - k2.ln() + rho2.ln();
    let llr = |u: f64| {
        let ln_u = u.ln();
        let ln_y_rho2 = ln_ratio + ln_u / k1;
        c0 + (k1 - 1.0) * ln_u / k1 - u - (k2 - 1.0) * ln_y_rho2 + (k2 * ln_y_rho2).exp()
    };
    // Beyond u_max the integrand is below 1e-16 in magnitude.
    let r = k2 / k1;
    let scale = (k2 * ln_ratio).exp();
    let mut u_max = 40.0f64;
    while (-u_max).exp() * (1.0 + scale * u_max.powf(r) + u_max + c0.abs() + (k1 - 1.0).abs() / k1 * u_max.ln()) > 1e-16 {
        u_max *= 1.5;
    }
    let upper = u1.min(u_max);
    let integral = integrate(
        |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            let w3 = w * w * w;
            let u = w3 * w;
            4.0 * w3 * (-u).exp() * llr(u)
        },
        0.0,
        upper.powf(0.25),
        KL_QUAD_TOL,
        4000,
    )?;
    let atom = if u1.is_finite() {
        let u2 = (tau / rho2).powf(k2);
        (-u1).exp() * (u2 - u1)
    } else {
        0.0
    };
    Ok((integral + if atom.is_finite() { atom } else { 0.0 }).max(0.0))
}

/// Closed-form divergence between uncensored Weibull laws.
pub fn kl_weibull_uncensored_native(rho1: f64, k1: f64, rho2: f64, k2: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    (k1 / rho1.powf(k1)).ln() - (k2 / rho2.powf(k2)).ln() + (k1 - k2) * (rho1.ln() - EULER / k1)
        + (rho1 / rho2).powf(k2) * statrs::function::gamma::gamma(k2 / k1 + 1.0)
        - 1.0
}
