//! Top-m problems: per context, maximize `min_{d in P, d' in U} G_{d,d'}`
//! over the simplex by exponentiated-gradient ascent.

use serde::Serialize;

use super::balance::balance_undesired;
use super::{balance_residual_topm, AllocError, AllocationVector, ContextProblem, GAMMA_BOUNDS};
use crate::optimize::{golden_min, grid_golden_max};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopmOptions {
    pub iterations: usize,
    /// Step size at iteration `t` is `step / sqrt(t)`.
    pub step: f64,
    /// Only iterates after this fraction of the run enter the average.
    pub burn_in: f64,
    /// Balance residual above which the solution is flagged as degraded.
    pub residual_threshold: f64,
}

impl Default for TopmOptions {
    fn default() -> Self {
        TopmOptions { iterations: 5000, step: 0.5, burn_in: 0.5, residual_threshold: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopmSolution {
    pub allocation: AllocationVector,
    /// Balance residual of the assembled allocation.
    pub residual: f64,
    /// The residual exceeds the threshold; the allocation may be far from optimal.
    pub degraded: bool,
    /// Per context: objective of the running average at iterations 2^k.
    pub trace: Vec<Vec<(usize, f64)>>,
}

/// Ascent on one context. Returns the averaged allocation and its trace.
fn ascend(problem: &ContextProblem, opts: &TopmOptions) -> (Vec<f64>, Vec<(usize, f64)>) {
    let n = problem.n_designs;
    let mut beta = vec![1.0 / n as f64; n];
    let mut avg = vec![0.0; n];
    let mut n_avg = 0usize;
    let start = ((opts.iterations as f64) * opts.burn_in) as usize;
    let mut trace = Vec::new();
    let mut next_mark = 1;
    let mut grad = vec![0.0; n];
    for t in 1..=opts.iterations {
        let (i, j, _) = problem.active_pair(&beta);
        let (p, u) = (problem.preferred[i], problem.undesired[j]);
        let part = problem.rates[i][j].partials(beta[p], beta[u]);
        grad.fill(0.0);
        grad[p] = part.dx;
        grad[u] = part.dy;
        let norm = part.dx.abs().max(part.dy.abs());
        if norm > 0.0 && norm.is_finite() {
            let eta = opts.step / (t as f64).sqrt() / norm;
            let mut total = 0.0;
            for (b, g) in beta.iter_mut().zip(&grad) {
                *b *= (eta * g).exp();
                total += *b;
            }
            beta.iter_mut().for_each(|b| *b /= total);
        }
        if t > start {
            n_avg += 1;
            let w = 1.0 / n_avg as f64;
            for (a, b) in avg.iter_mut().zip(&beta) {
                *a += w * (b - *a);
            }
        }
        if t == next_mark || t == opts.iterations {
            let current = if n_avg > 0 { &avg } else { &beta };
            trace.push((t, problem.objective(current)));
            next_mark *= 2;
        }
    }
    (avg, trace)
}

/// Allocation with preferred shares `x` and the undesired designs balanced.
fn balanced(problem: &ContextProblem, x: &[f64]) -> Option<(Vec<f64>, f64)> {
    let sol = balance_undesired(x, &problem.rates).ok()?;
    let mut beta = vec![0.0; problem.n_designs];
    for (&p, &xi) in problem.preferred.iter().zip(x) {
        beta[p] = xi;
    }
    for (&u, &b) in problem.undesired.iter().zip(&sol.beta) {
        beta[u] = b;
    }
    Some((beta, sol.value))
}

/// Refines the preferred shares of an ascent result. For fixed shares the
/// undesired designs are balanced exactly; the best value as a function of
/// the shares is concave, and is maximized one coordinate at a time.
fn polish(problem: &ContextProblem, start: &[f64]) -> Option<(Vec<f64>, f64)> {
    let value_of = |x: &[f64]| balanced(problem, x).map_or(f64::NEG_INFINITY, |b| b.1);
    let mut x: Vec<f64> = problem.preferred.iter().map(|&p| start[p]).collect();
    if x.len() == 1 {
        let (g, _) = grid_golden_max(|g| value_of(&[g]), GAMMA_BOUNDS[0], GAMMA_BOUNDS[1], 50, 1e-12);
        x[0] = g;
        return balanced(problem, &x);
    }
    let mut best = value_of(&x);
    for _ in 0..50 {
        let before = best;
        for i in 0..x.len() {
            let others: f64 = x.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, v)| v).sum();
            let (lo, hi) = (0.2 * x[i], x[i] + 0.8 * (1.0 - others - x[i]));
            let mut trial = x.clone();
            let (xi, v) = golden_min(
                |t| {
                    trial[i] = t;
                    -value_of(&trial)
                },
                lo,
                hi,
                1e-13,
            );
            if -v > best {
                best = -v;
                x[i] = xi;
            }
        }
        if best - before <= 1e-14 * best.abs() {
            break;
        }
    }
    balanced(problem, &x)
}

/// Solves every context by exponentiated-gradient ascent, refines the
/// result by exact balancing of the undesired designs, and assembles `alpha`
/// from the per-context optima.
pub fn solve_topm_allocation(problems: &[ContextProblem], opts: &TopmOptions) -> Result<TopmSolution, AllocError> {
    if problems.is_empty() {
        return Err(AllocError::Invalid("no contexts".into()));
    }
    let mut betas = Vec::with_capacity(problems.len());
    let mut values = Vec::with_capacity(problems.len());
    let mut gammas = Vec::with_capacity(problems.len());
    let mut traces = Vec::with_capacity(problems.len());
    for p in problems {
        let (mut beta, trace) = ascend(p, opts);
        let mut value = p.objective(&beta);
        if let Some((b, v)) = polish(p, &beta) {
            if v > value {
                beta = b;
                value = v;
            }
        }
        values.push(value);
        gammas.push(p.preferred.iter().map(|&d| beta[d]).sum());
        betas.push(beta);
        traces.push(trace);
    }
    let allocation = AllocationVector::assemble(betas, gammas, values)?;
    let residual = balance_residual_topm(&allocation, problems);
    Ok(TopmSolution { degraded: !(residual <= opts.residual_threshold), allocation, residual, trace: traces })
}
