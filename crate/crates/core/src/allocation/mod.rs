//! Static allocation problems: maximize the posterior large-deviations rate
//! over context ratios `alpha` and within-context ratios `beta`.

mod balance;
mod checks;
mod topm;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ranking::top_m;
use crate::rates::{GaussianKnownVar, GenericRate, RateError, RateFamily, SharedRate};

pub use balance::{alpha_star, allocation_for_gamma, optimize_gamma, solve_balance_best, BalanceSolution, GAMMA_BOUNDS};
pub use checks::{
    balance_residual_topm, empirical_rate_trajectory, kkt_residual_best, prop6_check, KktReport, Prop6Report,
    TrajectoryRow,
};
pub use topm::{solve_topm_allocation, TopmOptions, TopmSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("no common rate value brackets the balance equation (degenerate rate specification)")]
    NonBracketing,
    #[error("context {0} has zero optimal rate")]
    ZeroRate(usize),
    #[error("gamma must lie in (0, 1), got {0}")]
    InvalidGamma(f64),
    #[error("invalid allocation problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// One context of a static problem: a partition of its designs into the
/// preferred set `P` and the undesired set `U`, and a rate for every pair.
#[derive(Debug, Clone)]
pub struct ContextProblem {
    pub n_designs: usize,
    pub preferred: Vec<usize>,
    pub undesired: Vec<usize>,
    /// `rates[i][j]` compares `preferred[i]` with `undesired[j]`.
    pub rates: Vec<Vec<SharedRate>>,
}

impl ContextProblem {
    pub fn new(
        n_designs: usize,
        preferred: Vec<usize>,
        undesired: Vec<usize>,
        rates: Vec<Vec<SharedRate>>,
    ) -> Result<Self, AllocError> {
        let mut seen = vec![false; n_designs];
        for &d in preferred.iter().chain(&undesired) {
            if d >= n_designs || std::mem::replace(&mut seen[d], true) {
                return Err(AllocError::Invalid(format!("design {d} repeated or out of range")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(AllocError::Invalid("preferred and undesired sets must cover every design".into()));
        }
        if preferred.is_empty() || undesired.is_empty() {
            return Err(AllocError::Invalid("both the preferred and the undesired set must be non-empty".into()));
        }
        if rates.len() != preferred.len() || rates.iter().any(|r| r.len() != undesired.len()) {
            return Err(AllocError::Invalid("rates must be |P| x |U|".into()));
        }
        Ok(ContextProblem { n_designs, preferred, undesired, rates })
    }

    /// Context whose designs have means `mus` and nuisance parameters `etas`;
    /// the top-`m` by mean are preferred.
    pub fn from_parameters(mus: &[f64], etas: &[f64], m: usize, family: RateFamily) -> Result<Self, AllocError> {
        if mus.len() != etas.len() || m == 0 || m >= mus.len() {
            return Err(AllocError::Invalid(format!("need 1 <= m < {} designs, got m = {m}", mus.len())));
        }
        let preferred = top_m(mus, m);
        let undesired: Vec<usize> = (0..mus.len()).filter(|d| !preferred.contains(d)).collect();
        let rates = preferred
            .iter()
            .map(|&p| {
                undesired
                    .iter()
                    .map(|&u| -> Result<SharedRate, AllocError> {
                        if mus[p] == mus[u] {
                            return Err(AllocError::Invalid(format!("designs {p} and {u} share a mean")));
                        }
                        Ok(match family {
                            RateFamily::GaussianKnownVar => Arc::new(GaussianKnownVar::new(mus[p], mus[u], etas[p], etas[u])?),
                            _ => Arc::new(GenericRate::new(family, (mus[p], etas[p]), (mus[u], etas[u]))?),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(mus.len(), preferred, undesired, rates)
    }

    /// `min_{i,j} G_ij(beta[p_i], beta[u_j])`.
    pub fn objective(&self, beta: &[f64]) -> f64 {
        self.active_pair(beta).2
    }

    /// Pair `(i, j)` attaining the objective, and its value. Ties go to the
    /// first pair in row-major order.
    pub fn active_pair(&self, beta: &[f64]) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for (i, &p) in self.preferred.iter().enumerate() {
            for (j, &u) in self.undesired.iter().enumerate() {
                let v = self.rates[i][j].value(beta[p], beta[u]);
                if v < best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }
}

/// A static allocation: `alpha` over contexts, `beta[c]` over the designs of
/// context `c`, `gamma[c]` the preferred-set share, and the achieved rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationVector {
    pub alpha: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    /// Per-context rate at `alpha(c) = 1`.
    pub context_values: Vec<f64>,
    /// Overall rate `1 / sum_c 1/context_values[c]`.
    pub value: f64,
}

impl AllocationVector {
    /// Assembles contexts solved independently: `alpha` follows from the
    /// per-context values.
    pub fn assemble(beta: Vec<Vec<f64>>, gamma: Vec<f64>, context_values: Vec<f64>) -> Result<Self, AllocError> {
        let (alpha, value) = alpha_star(&context_values)?;
        Ok(AllocationVector { alpha, beta, gamma, context_values, value })
    }
}
