//! Exact sampling probabilities of one top-two step when every context has a
//! single target and the posterior only matters through `pi[c][d]`, the
//! probability that design `d` is best in context `c` (independently across
//! contexts).
//!
//! Conditioning on the first draw's best designs `d1(.)`: the re-draw
//! disagrees in a random set `S` of contexts, each context `c` independently
//! with probability `1 - pi[c][d1(c)]`, and the step conditions on `S` being
//! non-empty. Context `c` is picked with probability `1/|S|` when it is in
//! `S`; then the first draw's design is taken with probability `gamma(c)`,
//! and otherwise the re-draw's design, distributed as `pi[c][.]` restricted
//! to the other designs.

use serde::Serialize;

use super::PolicyError;

/// Largest number of first-draw assignments `prod_c |D_c|` enumerated.
pub const MAX_ANALYTIC_FUNCTIONS: usize = 1_000_000;

/// Largest number of contexts.
pub const MAX_ANALYTIC_CONTEXTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyProbabilities {
    /// Probability that the step samples design `d` of context `c`.
    pub psi: Vec<Vec<f64>>,
    /// Probability that the step samples context `c`.
    pub alpha: Vec<f64>,
    /// `psi / alpha`.
    pub beta: Vec<Vec<f64>>,
}

fn fail(msg: String) -> PolicyError {
    PolicyError::Analytic(msg)
}

/// `E[1 / (1 + K)]` for `K` a sum of independent Bernoulli(`probs[i]`).
fn mean_inverse_one_plus(probs: impl Iterator<Item = f64>) -> f64 {
    let mut dist = vec![1.0];
    for p in probs {
        let mut next = vec![0.0; dist.len() + 1];
        for (k, &w) in dist.iter().enumerate() {
            next[k] += w * (1.0 - p);
            next[k + 1] += w * p;
        }
        dist = next;
    }
    dist.iter().enumerate().map(|(k, w)| w / (k as f64 + 1.0)).sum()
}

/// Exact step probabilities for per-context weights `gamma`.
pub fn analytic_policy_prob(pi: &[Vec<f64>], gamma: &[f64]) -> Result<PolicyProbabilities, PolicyError> {
    let nc = pi.len();
    if nc == 0 || nc > MAX_ANALYTIC_CONTEXTS {
        return Err(fail(format!("need 1..={MAX_ANALYTIC_CONTEXTS} contexts, got {nc}")));
    }
    if gamma.len() != nc {
        return Err(fail(format!("{} gamma values for {nc} contexts", gamma.len())));
    }
    if let Some(g) = gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(fail(format!("gamma {g} outside [0, 1]")));
    }
    let mut functions: usize = 1;
    for (c, p) in pi.iter().enumerate() {
        let total: f64 = p.iter().sum();
        if p.len() < 2 || p.iter().any(|x| !(*x >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(fail(format!("pi[{c}] is not a probability vector over at least two designs")));
        }
        if p.iter().any(|&x| x >= 1.0) {
            return Err(fail(format!("pi[{c}] puts all mass on one design; that context never disagrees")));
        }
        functions = functions
            .checked_mul(p.len())
            .filter(|&f| f <= MAX_ANALYTIC_FUNCTIONS)
            .ok_or_else(|| fail(format!("more than {MAX_ANALYTIC_FUNCTIONS} first-draw assignments")))?;
    }

    let mut psi: Vec<Vec<f64>> = pi.iter().map(|p| vec![0.0; p.len()]).collect();
    let mut d1 = vec![0usize; nc];
    let mut p_first = vec![0.0; nc];
    for _ in 0..functions {
        let mut weight = 1.0;
        let mut agree = 1.0;
        for c in 0..nc {
            p_first[c] = pi[c][d1[c]];
            weight *= p_first[c];
            agree *= p_first[c];
        }
        if weight > 0.0 {
            let scale = weight / (1.0 - agree);
            for c in 0..nc {
                let others = (0..nc).filter(|&k| k != c).map(|k| 1.0 - p_first[k]);
                let w = scale * (1.0 - p_first[c]) * mean_inverse_one_plus(others);
                psi[c][d1[c]] += w * gamma[c];
                let explore = w * (1.0 - gamma[c]) / (1.0 - p_first[c]);
                for (d, slot) in psi[c].iter_mut().enumerate() {
                    if d != d1[c] {
                        *slot += explore * pi[c][d];
                    }
                }
            }
        }
        // Mixed-radix increment of the assignment.
        for c in 0..nc {
            d1[c] += 1;
            if d1[c] < pi[c].len() {
                break;
            }
            d1[c] = 0;
        }
    }
    let alpha: Vec<f64> = psi.iter().map(|row| row.iter().sum()).collect();
    let beta = psi
        .iter()
        .zip(&alpha)
        .map(|(row, &a)| row.iter().map(|&x| if a > 0.0 { x / a } else { 0.0 }).collect())
        .collect();
    Ok(PolicyProbabilities { psi, alpha, beta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_designs_single_context() {
        let p = analytic_policy_prob(&[vec![0.9, 0.1]], &[0.5]).unwrap();
        assert!((p.psi[0][0] - 0.5).abs() < 1e-15 && (p.psi[0][1] - 0.5).abs() < 1e-15);
        assert_eq!(p.alpha, vec![1.0]);
    }

    #[test]
    fn pure_exploitation_is_thompson_sampling() {
        let pi = vec![0.2, 0.5, 0.3];
        let p = analytic_policy_prob(std::slice::from_ref(&pi), &[1.0]).unwrap();
        for (a, b) in p.psi[0].iter().zip(&pi) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let pi = vec![vec![0.6, 0.3, 0.1], vec![0.25, 0.25, 0.5], vec![0.7, 0.3]];
        let p = analytic_policy_prob(&pi, &[0.5, 0.3, 0.8]).unwrap();
        let total: f64 = p.alpha.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        for b in &p.beta {
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_degenerate_and_oversized_inputs() {
        assert!(analytic_policy_prob(&[vec![1.0, 0.0]], &[0.5]).is_err());
        assert!(analytic_policy_prob(&vec![vec![0.5, 0.5]; 13], &[0.5; 13]).is_err());
        assert!(analytic_policy_prob(&vec![vec![0.1; 10]; 7], &[0.5; 7]).is_err());
    }
}
