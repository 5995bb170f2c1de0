//! Residual checkers for optimality conditions of static allocations.

use serde::Serialize;

use super::{AllocError, AllocationVector, ContextProblem};
use crate::rates::rate_gaussian_known_var;

fn spread(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if max == min {
        0.0
    } else {
        (max - min) / mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    /// Per context `|sum_{d in U} dG_d/dx / dG_d/dy - 1|` over differentiable entries.
    pub eq9: Vec<f64>,
    /// `(context, undesired index)` entries skipped because the rate has a kink there.
    pub kinks: Vec<(usize, usize)>,
    /// `(max - min) / mean` of `alpha(c) G_d(beta(d*), beta(d))` over all contexts and `d in U_c`.
    pub eq10_spread: f64,
}

impl KktReport {
    pub fn max_eq9(&self) -> f64 {
        self.eq9.iter().copied().fold(0.0, f64::max)
    }
}

/// Stationarity (sum of derivative ratios equals one) and balance residuals
/// of a best-design allocation.
pub fn kkt_residual_best(allocation: &AllocationVector, problems: &[ContextProblem]) -> Result<KktReport, AllocError> {
    let mut eq9 = Vec::with_capacity(problems.len());
    let mut kinks = Vec::new();
    let mut terms = Vec::new();
    for (c, p) in problems.iter().enumerate() {
        let [d_star] = p.preferred.as_slice() else {
            return Err(AllocError::Invalid("best-design residual needs one preferred design per context".into()));
        };
        let beta = &allocation.beta[c];
        if beta.iter().any(|&b| !(b > 0.0)) {
            return Err(AllocError::Invalid(format!("allocation of context {c} is not strictly positive")));
        }
        let mut sum = 0.0;
        for (j, &u) in p.undesired.iter().enumerate() {
            let rate = &p.rates[0][j];
            let part = rate.partials(beta[*d_star], beta[u]);
            if part.kink {
                kinks.push((c, j));
            } else {
                sum += part.dx / part.dy;
            }
            terms.push(allocation.alpha[c] * rate.value(beta[*d_star], beta[u]));
        }
        eq9.push((sum - 1.0).abs());
    }
    Ok(KktReport { eq9, kinks, eq10_spread: spread(&terms) })
}

fn topm_minima(alpha: f64, beta: &[f64], p: &ContextProblem, out: &mut Vec<f64>) {
    let g = |i: usize, j: usize| p.rates[i][j].value(beta[p.preferred[i]], beta[p.undesired[j]]);
    for j in 0..p.undesired.len() {
        out.push(alpha * (0..p.preferred.len()).map(|i| g(i, j)).fold(f64::INFINITY, f64::min));
    }
    for i in 0..p.preferred.len() {
        out.push(alpha * (0..p.undesired.len()).map(|j| g(i, j)).fold(f64::INFINITY, f64::min));
    }
}

/// Relative spread `(max - min) / mean` of the balance minima: for every
/// undesired design the minimum over preferred partners, and for every
/// preferred design the minimum over undesired partners, scaled by `alpha`.
pub fn balance_residual_topm(allocation: &AllocationVector, problems: &[ContextProblem]) -> f64 {
    let mut minima = Vec::new();
    for (c, p) in problems.iter().enumerate() {
        topm_minima(allocation.alpha[c], &allocation.beta[c], p, &mut minima);
    }
    spread(&minima)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop6Report {
    /// Equivalence classes of designs linked by active pairs.
    pub classes: Vec<Vec<usize>>,
    /// Per class `|sum_P (psi/sigma)^2 - sum_U (psi/sigma)^2|`, relative to the larger side.
    pub class_residuals: Vec<f64>,
    /// Smallest pairwise rate.
    pub z: f64,
    /// Every pair has rate at least `z` and equality holds exactly on active pairs.
    pub pattern_matches: bool,
    /// Every design appears in some active pair.
    pub covers_all: bool,
    pub passes: bool,
}

/// Checks the equivalence-class conditions for a Gaussian known-variance
/// context. `active[i][j]` marks the pairs `(preferred[i], undesired[j])`
/// claimed to attain the minimum rate.
pub fn prop6_check(
    psi: &[f64],
    mu: &[f64],
    var: &[f64],
    preferred: &[usize],
    undesired: &[usize],
    active: &[Vec<bool>],
    tol: f64,
) -> Result<Prop6Report, AllocError> {
    let n = psi.len();
    if mu.len() != n || var.len() != n {
        return Err(AllocError::Invalid("psi, mu and var must have equal lengths".into()));
    }
    if active.len() != preferred.len() || active.iter().any(|r| r.len() != undesired.len()) {
        return Err(AllocError::Invalid("pattern must be |P| x |U|".into()));
    }
    if !active.iter().flatten().any(|&a| a) {
        return Err(AllocError::Invalid("pattern has no active pair".into()));
    }
    let rate = |d: usize, u: usize| rate_gaussian_known_var(psi[d], psi[u], mu[d], mu[u], var[d], var[u]);
    let z = preferred
        .iter()
        .flat_map(|&d| undesired.iter().map(move |&u| (d, u)))
        .map(|(d, u)| rate(d, u))
        .fold(f64::INFINITY, f64::min);
    let mut pattern_matches = true;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for (i, &d) in preferred.iter().enumerate() {
        for (j, &u) in undesired.iter().enumerate() {
            let at_min = (rate(d, u) - z).abs() <= tol * z.abs().max(1e-300);
            if at_min != active[i][j] {
                pattern_matches = false;
            }
            if active[i][j] {
                let (a, b) = (find(&mut parent, d), find(&mut parent, u));
                parent[a] = b;
            }
        }
    }
    let members: Vec<usize> = preferred.iter().chain(undesired).copied().collect();
    let covers_all = preferred.iter().enumerate().all(|(i, _)| active[i].iter().any(|&a| a))
        && (0..undesired.len()).all(|j| active.iter().any(|r| r[j]));
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for &d in &members {
        let r = find(&mut parent, d);
        match roots.iter().position(|&x| x == r) {
            Some(k) => classes[k].push(d),
            None => {
                roots.push(r);
                classes.push(vec![d]);
            }
        }
    }
    let class_residuals: Vec<f64> = classes
        .iter()
        .map(|cls| {
            let side = |set: &[usize]| cls.iter().filter(|d| set.contains(d)).map(|&d| psi[d] * psi[d] / var[d]).sum::<f64>();
            let (a, b) = (side(preferred), side(undesired));
            (a - b).abs() / a.max(b).max(1e-300)
        })
        .collect();
    let passes = pattern_matches && covers_all && class_residuals.iter().all(|&r| r <= tol);
    Ok(Prop6Report { classes, class_residuals, z, pattern_matches, covers_all, passes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub checkpoint: u64,
    /// Per context: the scaled rate terms, `None` when the context is unvisited.
    pub terms: Vec<Option<Vec<f64>>>,
    /// Per context `(max - min) / mean` of the terms.
    pub spread: Vec<Option<f64>>,
}

/// Evaluates the empirical rate terms at each snapshot of per-design counts.
///
/// For a single preferred design the terms are `alpha_T(c) G_d(gamma(c),
/// beta_T(c, d))` over `d in U_c`; otherwise they are the balance minima
/// computed from the empirical `beta_T`.
pub fn empirical_rate_trajectory(
    snapshots: &[(u64, Vec<u64>)],
    ranges: &[std::ops::Range<usize>],
    problems: &[ContextProblem],
    gamma: &[f64],
) -> Result<Vec<TrajectoryRow>, AllocError> {
    if let Some(&g) = gamma.iter().find(|&&g| !(g > 0.0 && g < 1.0)) {
        return Err(AllocError::InvalidGamma(g));
    }
    if ranges.len() != problems.len() || gamma.len() != problems.len() {
        return Err(AllocError::Invalid("ranges, problems and gamma must cover the same contexts".into()));
    }
    let mut rows = Vec::with_capacity(snapshots.len());
    for (checkpoint, counts) in snapshots {
        let total: u64 = counts.iter().sum();
        let mut terms = Vec::with_capacity(problems.len());
        let mut spreads = Vec::with_capacity(problems.len());
        for (c, (range, p)) in ranges.iter().zip(problems).enumerate() {
            let n_c: u64 = counts[range.clone()].iter().sum();
            if n_c == 0 || total == 0 {
                terms.push(None);
                spreads.push(None);
                continue;
            }
            let alpha = n_c as f64 / total as f64;
            let beta: Vec<f64> = counts[range.clone()].iter().map(|&k| k as f64 / n_c as f64).collect();
            let mut t = Vec::new();
            if p.preferred.len() == 1 {
                for (j, &u) in p.undesired.iter().enumerate() {
                    t.push(alpha * p.rates[0][j].value(gamma[c], beta[u]));
                }
            } else {
                topm_minima(alpha, &beta, p, &mut t);
            }
            spreads.push(Some(spread(&t)));
            terms.push(Some(t));
        }
        rows.push(TrajectoryRow { checkpoint: *checkpoint, terms, spread: spreads });
    }
    Ok(rows)
}
