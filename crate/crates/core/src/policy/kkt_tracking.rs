//! Baselines that steer toward the balance of the Gaussian rate: both find
//! the context and (preferred, undesired) pair with the smallest
//! signal-to-noise ratio `(m_d - m_d')^2 / (v_d/N_d + v_d'/N_d')` and sample
//! one of its two designs.
//!
//! BOLDmc uses sample means and variances and picks the side whose weighted
//! precision sum is smaller; AOAmc uses posterior means and observation
//! variances and picks the design whose extra sample raises the context's
//! smallest ratio more.

use serde::Serialize;
use serde_json::{Map, Value};

use super::{reject_unknown_keys, Policy, PolicyError, StepContext, StepDecision};
use crate::instance::ProblemInstance;
use crate::ranking::top_m;

/// Minimizing triple of the ratio search, with global design indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateTriple {
    pub context: usize,
    pub preferred: usize,
    pub undesired: usize,
    pub ratio: f64,
}

fn ratio(means: &[f64], vars: &[f64], counts: &[f64], d: usize, dp: usize) -> f64 {
    let noise = (vars[d] / counts[d] + vars[dp] / counts[dp]).max(f64::MIN_POSITIVE);
    (means[d] - means[dp]).powi(2) / noise
}

/// Estimated top set of context `c` (global indices) and its complement.
fn split(instance: &ProblemInstance, means: &[f64], c: usize) -> (Vec<usize>, Vec<usize>) {
    let r = instance.context_range(c);
    let top: Vec<usize> = top_m(&means[r.clone()], instance.m()[c]).into_iter().map(|j| r.start + j).collect();
    let rest = r.filter(|g| !top.contains(g)).collect();
    (top, rest)
}

/// Exhaustive argmin of the ratio over contexts, estimated top designs `d`
/// and the remaining designs `d'`. Ties go to the first triple in the order
/// context, then `d`, then `d'`. `None` when no context has both sets.
pub fn candidate_triple(
    instance: &ProblemInstance,
    means: &[f64],
    vars: &[f64],
    counts: &[f64],
) -> Option<CandidateTriple> {
    let mut best: Option<CandidateTriple> = None;
    for c in 0..instance.n_contexts() {
        let (top, rest) = split(instance, means, c);
        for &d in &top {
            for &dp in &rest {
                let v = ratio(means, vars, counts, d, dp);
                if best.is_none_or(|b| v < b.ratio) {
                    best = Some(CandidateTriple { context: c, preferred: d, undesired: dp, ratio: v });
                }
            }
        }
    }
    best
}

/// Smallest ratio of context `c`.
fn context_min_ratio(instance: &ProblemInstance, means: &[f64], vars: &[f64], counts: &[f64], c: usize) -> f64 {
    let (top, rest) = split(instance, means, c);
    top.iter()
        .flat_map(|&d| rest.iter().map(move |&dp| (d, dp)))
        .map(|(d, dp)| ratio(means, vars, counts, d, dp))
        .fold(f64::INFINITY, f64::min)
}

fn counts_of(ctx: &StepContext<'_>, min: u64) -> Result<Vec<f64>, PolicyError> {
    ctx.history
        .counts()
        .iter()
        .enumerate()
        .map(|(design, &count)| {
            if count < min {
                Err(PolicyError::UndefinedVariance { design, count })
            } else {
                Ok(count as f64)
            }
        })
        .collect()
}

fn no_candidate() -> PolicyError {
    PolicyError::Config("no context has both a preferred and an undesired design".into())
}

pub struct BoldMc;

impl Policy for BoldMc {
    fn kind(&self) -> &'static str {
        "boldmc"
    }

    fn step(&mut self, ctx: StepContext<'_>) -> Result<StepDecision, PolicyError> {
        let counts = counts_of(&ctx, 2)?;
        let n = counts.len();
        let means: Vec<f64> = (0..n).map(|g| ctx.history.stats(g).mean).collect();
        let vars: Vec<f64> = (0..n)
            .map(|g| ctx.history.stats(g).variance_unbiased().expect("two samples").max(f64::MIN_POSITIVE))
            .collect();
        let t = candidate_triple(ctx.instance, &means, &vars, &counts).ok_or_else(no_candidate)?;
        let (top, rest) = split(ctx.instance, &means, t.context);
        let total = ctx.history.total() as f64;
        let weight = |g: &usize| (counts[*g] / total).powi(2) / vars[*g];
        let design = if top.iter().map(weight).sum::<f64>() < rest.iter().map(weight).sum::<f64>() {
            t.preferred
        } else {
            t.undesired
        };
        Ok(StepDecision::plain(t.context, design))
    }
}

pub struct AoaMc;

impl Policy for AoaMc {
    fn kind(&self) -> &'static str {
        "aoamc"
    }

    fn step(&mut self, ctx: StepContext<'_>) -> Result<StepDecision, PolicyError> {
        let mut counts = counts_of(&ctx, 2)?;
        let n = counts.len();
        let moments: Vec<_> = (0..n).map(|g| ctx.posterior.moments(g)).collect();
        let means: Vec<f64> = moments.iter().map(|m| m.mean_mu).collect();
        let vars: Vec<f64> = moments.iter().map(|m| m.obs_var).collect();
        let t = candidate_triple(ctx.instance, &means, &vars, &counts).ok_or_else(no_candidate)?;
        let mut look_ahead = |g: usize| {
            counts[g] += 1.0;
            let v = context_min_ratio(ctx.instance, &means, &vars, &counts, t.context);
            counts[g] -= 1.0;
            v
        };
        let design = if look_ahead(t.preferred) > look_ahead(t.undesired) { t.preferred } else { t.undesired };
        Ok(StepDecision::plain(t.context, design))
    }
}

/// No keys.
pub(super) fn build_bold(_instance: &ProblemInstance, params: &Map<String, Value>) -> Result<Box<dyn Policy>, PolicyError> {
    reject_unknown_keys(params, &[])?;
    Ok(Box::new(BoldMc))
}

/// No keys.
pub(super) fn build_aoa(_instance: &ProblemInstance, params: &Map<String, Value>) -> Result<Box<dyn Policy>, PolicyError> {
    reject_unknown_keys(params, &[])?;
    Ok(Box::new(AoaMc))
}
