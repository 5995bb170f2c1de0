//! Best-design problems (`|P_c| = 1`): balance of the undesired rates for a
//! given `gamma`, the context ratios, and the search over `gamma`.

use serde::Serialize;

use super::{AllocError, AllocationVector, ContextProblem};
use crate::optimize::grid_golden_max;
use crate::rates::SharedRate;

/// Search interval for `gamma`; keeps every rate strictly positive.
pub const GAMMA_BOUNDS: [f64; 2] = [1e-3, 1.0 - 1e-3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceSolution {
    /// Allocation of each undesired design, in the order of the rates.
    pub beta: Vec<f64>,
    /// Common value `min_j G_j(gamma, beta_j)`.
    pub value: f64,
}

/// Solves `max min_j G_j(gamma, beta_j)` subject to `sum_j beta_j = 1 - gamma`.
///
/// Bisection on the common value `z`: each `beta_j(z)` is the smallest
/// allocation with `G_j(gamma, beta_j) >= z`, and `z` is pushed up while the
/// required mass still fits. Mass left over because some rate is flat goes
/// to the last design.
pub fn solve_balance_best(gamma: f64, rates: &[SharedRate]) -> Result<BalanceSolution, AllocError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(AllocError::InvalidGamma(gamma));
    }
    if rates.is_empty() {
        return Err(AllocError::Invalid("no undesired designs".into()));
    }
    balance_undesired(&[gamma], std::slice::from_ref(&rates.to_vec()))
}

/// Balanced undesired allocation for fixed preferred allocations `x`:
/// maximizes `z` such that `beta_j = max_i inverse_ij(x_i, z)` fits in
/// `1 - sum(x)`. `rates[i][j]` pairs preferred `i` with undesired `j`.
pub(crate) fn balance_undesired(x: &[f64], rates: &[Vec<SharedRate>]) -> Result<BalanceSolution, AllocError> {
    let budget = 1.0 - x.iter().sum::<f64>();
    if !(budget > 0.0) {
        return Err(AllocError::Invalid("preferred allocations leave no mass".into()));
    }
    let n_u = rates[0].len();
    let required = |z: f64| -> Option<Vec<f64>> {
        let mut total = 0.0;
        let mut beta = Vec::with_capacity(n_u);
        for j in 0..n_u {
            let mut b: f64 = 0.0;
            for (i, row) in rates.iter().enumerate() {
                b = b.max(row[j].inverse(x[i], z, budget)?);
            }
            total += b;
            beta.push(b);
        }
        (total <= budget).then_some(beta)
    };
    let mut hi = rates
        .iter()
        .zip(x)
        .flat_map(|(row, &xi)| row.iter().map(move |r| r.value(xi, budget)))
        .fold(f64::INFINITY, f64::min);
    if !(hi > 0.0) || !hi.is_finite() {
        return Err(AllocError::NonBracketing);
    }
    let mut lo = 0.0;
    let mut beta = match required(hi) {
        Some(b) => {
            lo = hi;
            b
        }
        None => required(0.0).ok_or(AllocError::NonBracketing)?,
    };
    if lo < hi {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match required(mid) {
                Some(b) => {
                    lo = mid;
                    beta = b;
                }
                None => hi = mid,
            }
        }
    }
    let slack = budget - beta.iter().sum::<f64>();
    *beta.last_mut().expect("non-empty") += slack.max(0.0);
    let value = (0..n_u)
        .flat_map(|j| rates.iter().zip(x).map(move |(row, &xi)| (row, xi, j)))
        .map(|(row, xi, j)| row[j].value(xi, beta[j]))
        .fold(f64::INFINITY, f64::min);
    Ok(BalanceSolution { beta, value })
}

/// `alpha(c) ∝ 1/Gamma_c` and the overall rate `1 / sum_c 1/Gamma_c`.
pub fn alpha_star(context_values: &[f64]) -> Result<(Vec<f64>, f64), AllocError> {
    if context_values.is_empty() {
        return Err(AllocError::Invalid("no contexts".into()));
    }
    if let Some(c) = context_values.iter().position(|&v| !(v > 0.0)) {
        return Err(AllocError::ZeroRate(c));
    }
    let inv_sum: f64 = context_values.iter().map(|v| 1.0 / v).sum();
    let alpha = context_values.iter().map(|v| (1.0 / v) / inv_sum).collect();
    Ok((alpha, 1.0 / inv_sum))
}

fn single_preferred(problem: &ContextProblem) -> Result<(usize, &[SharedRate]), AllocError> {
    match problem.preferred.as_slice() {
        [d] => Ok((*d, &problem.rates[0])),
        _ => Err(AllocError::Invalid("best-design solver needs exactly one preferred design".into())),
    }
}

fn context_beta(problem: &ContextProblem, d_star: usize, gamma: f64, sol: &BalanceSolution) -> Vec<f64> {
    let mut beta = vec![0.0; problem.n_designs];
    beta[d_star] = gamma;
    for (&u, &b) in problem.undesired.iter().zip(&sol.beta) {
        beta[u] = b;
    }
    beta
}

/// Assembles the allocation for fixed per-context `gamma`.
pub fn allocation_for_gamma(problems: &[ContextProblem], gamma: &[f64]) -> Result<AllocationVector, AllocError> {
    if gamma.len() != problems.len() {
        return Err(AllocError::Invalid(format!("{} gammas for {} contexts", gamma.len(), problems.len())));
    }
    let mut betas = Vec::with_capacity(problems.len());
    let mut values = Vec::with_capacity(problems.len());
    for (p, &g) in problems.iter().zip(gamma) {
        let (d_star, rates) = single_preferred(p)?;
        let sol = solve_balance_best(g, rates)?;
        betas.push(context_beta(p, d_star, g, &sol));
        values.push(sol.value);
    }
    AllocationVector::assemble(betas, gamma.to_vec(), values)
}

/// Maximizes each context's balanced rate over `gamma` (coarse grid of 50
/// points, then golden-section refinement) and assembles the allocation.
pub fn optimize_gamma(problems: &[ContextProblem]) -> Result<AllocationVector, AllocError> {
    let mut gammas = Vec::with_capacity(problems.len());
    for p in problems {
        let (_, rates) = single_preferred(p)?;
        let f = |g: f64| solve_balance_best(g, rates).map_or(f64::NEG_INFINITY, |s| s.value);
        let (g, _) = grid_golden_max(f, GAMMA_BOUNDS[0], GAMMA_BOUNDS[1], 50, 1e-12);
        gammas.push(g);
    }
    allocation_for_gamma(problems, &gammas)
}
