//! Top-two Thompson sampling for contextual top-m selection.
//!
//! Each step draws a joint posterior sample, takes its top-`m_c` set in every
//! context, and re-draws until some context's top set changes. One of the
//! disagreeing contexts is picked uniformly; within it the policy samples a
//! design from the first draw's top set with probability `gamma(c)`, and
//! otherwise one from the re-draw's top set.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use statrs::function::erf::erfc;

use super::{parse_param, reject_unknown_keys, Policy, PolicyError, StepContext, StepDecision};
use crate::allocation::{optimize_gamma, solve_topm_allocation, ContextProblem, TopmOptions, GAMMA_BOUNDS};
use crate::history::AllocationHistory;
use crate::instance::ProblemInstance;
use crate::posterior::Posterior;
use crate::ranking::top_m_into;
use crate::rates::RateFamily;
use crate::rng::SimRng;

/// Posterior re-draws allowed per step before the fallback rule applies.
pub const DEFAULT_RESAMPLE_CAP: usize = 1000;

/// Total budgets at which the tuned variant re-solves `gamma`.
pub const DEFAULT_TUNE_SCHEDULE: [u64; 4] = [10, 100, 1000, 10000];

/// What a step does when no re-draw disagrees within the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackRule {
    /// Uniform context, then its least-sampled design.
    LeastSampled,
    /// Picks a context and a (preferred, undesired) pair with weight equal to
    /// the Gaussian-approximate posterior probability that the pair is
    /// misordered, then exploits with probability `gamma(c)` as a regular
    /// step would.
    PosteriorTail,
    /// Fail the step.
    Disabled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaRule {
    /// Fixed per-context weights.
    Fixed,
    /// Re-solve the static allocation problem whenever the total budget
    /// reaches the next schedule entry.
    Tuned { schedule: Vec<u64>, next: usize },
}

pub struct TopTwo {
    gamma: Vec<f64>,
    rule: GammaRule,
    resample_cap: usize,
    fallback: FallbackRule,
    warnings: usize,
    mu1: Vec<f64>,
    mu2: Vec<f64>,
    top1: Vec<Vec<usize>>,
    scratch: Vec<usize>,
    delta: Vec<usize>,
}

impl TopTwo {
    /// `gamma` holds one weight in `[0, 1]` per context.
    pub fn new(
        instance: &ProblemInstance,
        gamma: Vec<f64>,
        rule: GammaRule,
        resample_cap: usize,
        fallback: FallbackRule,
    ) -> Result<Self, PolicyError> {
        if gamma.len() != instance.n_contexts() {
            return Err(PolicyError::Config(format!(
                "{} gamma values for {} contexts",
                gamma.len(),
                instance.n_contexts()
            )));
        }
        if let Some(g) = gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(PolicyError::Config(format!("gamma {g} outside [0, 1]")));
        }
        if let GammaRule::Tuned { schedule, .. } = &rule {
            if schedule.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PolicyError::Config("tune schedule must be strictly increasing".into()));
            }
        }
        if resample_cap == 0 {
            return Err(PolicyError::Config("resample_cap must be at least 1".into()));
        }
        Ok(TopTwo {
            gamma,
            rule,
            resample_cap,
            fallback,
            warnings: 0,
            mu1: vec![0.0; instance.n_designs()],
            mu2: vec![0.0; instance.n_designs()],
            top1: vec![Vec::new(); instance.n_contexts()],
            scratch: Vec::new(),
            delta: Vec::new(),
        })
    }

    /// Fixed-gamma variant with the default cap and fallback.
    pub fn coin(instance: &ProblemInstance, gamma: f64) -> Result<Self, PolicyError> {
        Self::new(
            instance,
            vec![gamma; instance.n_contexts()],
            GammaRule::Fixed,
            DEFAULT_RESAMPLE_CAP,
            FallbackRule::PosteriorTail,
        )
    }

    fn maybe_retune(&mut self, instance: &ProblemInstance, posterior: &mut dyn Posterior, total: u64) {
        let GammaRule::Tuned { schedule, next } = &mut self.rule else {
            return;
        };
        let mut crossed = false;
        while *next < schedule.len() && total >= schedule[*next] {
            *next += 1;
            crossed = true;
        }
        if !crossed {
            return;
        }
        for (c, g) in tuned_gamma(instance, posterior).into_iter().enumerate() {
            match g {
                Some(g) => self.gamma[c] = g.clamp(GAMMA_BOUNDS[0], GAMMA_BOUNDS[1]),
                None => {
                    self.warnings += 1;
                    log::warn!("gamma re-solve failed for context {c} at budget {total}; keeping {}", self.gamma[c]);
                }
            }
        }
    }

    fn fallback_step(&mut self, ctx: StepContext<'_>, tie: bool) -> Result<StepDecision, PolicyError> {
        let cap = self.resample_cap;
        let decision = |context, design| StepDecision {
            context,
            design,
            resamples_used: cap,
            fallback: true,
            tie,
        };
        match self.fallback {
            FallbackRule::Disabled => Err(PolicyError::ResampleExhausted { cap }),
            FallbackRule::LeastSampled => {
                let c = ctx.rng.random_range(0..ctx.instance.n_contexts());
                Ok(decision(c, least_sampled(ctx.history, ctx.instance, c)))
            }
            FallbackRule::PosteriorTail => {
                match posterior_tail_pair(ctx.instance, ctx.posterior, &self.top1, ctx.rng) {
                    Some((c, d, dp)) => {
                        let design = if ctx.rng.random::<f64>() < self.gamma[c] { d } else { dp };
                        Ok(decision(c, design))
                    }
                    None => {
                        let c = ctx.rng.random_range(0..ctx.instance.n_contexts());
                        Ok(decision(c, least_sampled(ctx.history, ctx.instance, c)))
                    }
                }
            }
        }
    }
}

impl Policy for TopTwo {
    fn kind(&self) -> &'static str {
        match self.rule {
            GammaRule::Fixed => "tttsc-coin",
            GammaRule::Tuned { .. } => "tttsc-tune",
        }
    }

    fn gamma(&self) -> Option<&[f64]> {
        Some(&self.gamma)
    }

    fn warnings(&self) -> usize {
        self.warnings
    }

    fn step(&mut self, ctx: StepContext<'_>) -> Result<StepDecision, PolicyError> {
        let instance = ctx.instance;
        self.maybe_retune(instance, ctx.posterior, ctx.history.total());
        let ranges = instance.context_ranges();
        let m = instance.m();

        ctx.posterior.sample_mu_into(ctx.rng, &mut self.mu1)?;
        let mut tie = false;
        for (c, r) in ranges.iter().enumerate() {
            tie |= top_m_into(&self.mu1[r.clone()], m[c], &mut self.top1[c]);
        }
        for used in 1..=self.resample_cap {
            ctx.posterior.sample_mu_into(ctx.rng, &mut self.mu2)?;
            self.delta.clear();
            for (c, r) in ranges.iter().enumerate() {
                tie |= top_m_into(&self.mu2[r.clone()], m[c], &mut self.scratch);
                if self.scratch != self.top1[c] {
                    self.delta.push(c);
                }
            }
            if self.delta.is_empty() {
                continue;
            }
            let c = self.delta[ctx.rng.random_range(0..self.delta.len())];
            let r = &ranges[c];
            top_m_into(&self.mu2[r.clone()], m[c], &mut self.scratch);
            let first = &self.top1[c];
            let only_first: Vec<usize> = first.iter().copied().filter(|d| !self.scratch.contains(d)).collect();
            let only_second: Vec<usize> = self.scratch.iter().copied().filter(|d| !first.contains(d)).collect();
            let d_first = only_first[ctx.rng.random_range(0..only_first.len())];
            let d_second = only_second[ctx.rng.random_range(0..only_second.len())];
            let local = if ctx.rng.random::<f64>() < self.gamma[c] { d_first } else { d_second };
            if tie {
                log::debug!("tie among sampled means broken by design order");
            }
            return Ok(StepDecision { context: c, design: r.start + local, resamples_used: used, fallback: false, tie });
        }
        self.fallback_step(ctx, tie)
    }
}

/// Global index of the least-sampled design of context `c` (lowest index on ties).
fn least_sampled(history: &AllocationHistory, instance: &ProblemInstance, c: usize) -> usize {
    instance.context_range(c).min_by_key(|&g| (history.count(g), g)).expect("contexts are non-empty")
}

/// `ln Phi(-z)` for `z >= 0`, accurate far into the tail.
fn ln_normal_tail(z: f64) -> f64 {
    if z < 30.0 {
        (0.5 * erfc(z / std::f64::consts::SQRT_2)).ln()
    } else {
        let z2 = z * z;
        -0.5 * z2 - z.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
    }
}

/// Samples `(context, preferred design, undesired design)` (global indices)
/// with weight `Phi(-(m_d - m_d') / sqrt(v_d + v_d'))` over pairs of the
/// first draw's top set and its complement. `None` if no context has a pair.
fn posterior_tail_pair(
    instance: &ProblemInstance,
    posterior: &mut dyn Posterior,
    top: &[Vec<usize>],
    rng: &mut SimRng,
) -> Option<(usize, usize, usize)> {
    let moments: Vec<_> = (0..instance.n_designs()).map(|g| posterior.moments(g)).collect();
    let mut triples = Vec::new();
    let mut log_w = Vec::new();
    for (c, r) in instance.context_ranges().iter().enumerate() {
        for &i in &top[c] {
            for j in (0..r.len()).filter(|j| !top[c].contains(j)) {
                let (a, b) = (&moments[r.start + i], &moments[r.start + j]);
                let sd = (a.var_mu + b.var_mu).sqrt();
                let gap = a.mean_mu - b.mean_mu;
                let lw = if sd.is_finite() && sd > 0.0 {
                    let z = gap / sd;
                    if z >= 0.0 {
                        ln_normal_tail(z)
                    } else {
                        (-ln_normal_tail(-z).exp()).ln_1p()
                    }
                } else if sd.is_infinite() || gap < 0.0 {
                    0.5f64.ln()
                } else {
                    f64::NEG_INFINITY
                };
                triples.push((c, r.start + i, r.start + j));
                log_w.push(lw);
            }
        }
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if triples.is_empty() || max == f64::NEG_INFINITY {
        return None;
    }
    let mut acc = 0.0;
    let cumulative: Vec<f64> = log_w
        .iter()
        .map(|&lw| {
            acc += (lw - max).exp();
            acc
        })
        .collect();
    let u = rng.random::<f64>() * acc;
    let k = cumulative.partition_point(|&x| x <= u).min(triples.len() - 1);
    Some(triples[k])
}

/// Per-context gamma from the static allocation problem at the plug-in
/// estimate: posterior means of `mu` and the posterior mean observation
/// variance, with the known-variance rate. `None` where the problem is
/// degenerate (tied means, non-finite variance) or the context has no
/// undesired design.
pub fn tuned_gamma(instance: &ProblemInstance, posterior: &mut dyn Posterior) -> Vec<Option<f64>> {
    let moments: Vec<_> = (0..instance.n_designs()).map(|g| posterior.moments(g)).collect();
    instance
        .context_ranges()
        .iter()
        .enumerate()
        .map(|(c, r)| {
            let mus: Vec<f64> = moments[r.clone()].iter().map(|m| m.mean_mu).collect();
            let vars: Vec<f64> = moments[r.clone()].iter().map(|m| m.obs_var).collect();
            if vars.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return None;
            }
            let m_c = instance.m()[c];
            let problem = ContextProblem::from_parameters(&mus, &vars, m_c, RateFamily::GaussianKnownVar).ok()?;
            if m_c == 1 {
                optimize_gamma(std::slice::from_ref(&problem)).ok().map(|a| a.gamma[0])
            } else {
                solve_topm_allocation(std::slice::from_ref(&problem), &TopmOptions::default())
                    .ok()
                    .map(|s| s.allocation.gamma[0])
            }
        })
        .collect()
}

fn common_params(params: &Map<String, Value>) -> Result<(usize, FallbackRule), PolicyError> {
    let cap = parse_param(params, "resample_cap")?.unwrap_or(DEFAULT_RESAMPLE_CAP);
    let fallback = parse_param(params, "fallback")?.unwrap_or(FallbackRule::PosteriorTail);
    Ok((cap, fallback))
}

/// `gamma` as a scalar or one value per context, strictly inside (0, 1).
fn parse_gamma(instance: &ProblemInstance, params: &Map<String, Value>) -> Result<Vec<f64>, PolicyError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum GammaParam {
        One(f64),
        PerContext(Vec<f64>),
    }
    let gamma = match parse_param::<GammaParam>(params, "gamma")? {
        None => vec![0.5; instance.n_contexts()],
        Some(GammaParam::One(g)) => vec![g; instance.n_contexts()],
        Some(GammaParam::PerContext(v)) => v,
    };
    if let Some(g) = gamma.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
        return Err(PolicyError::Config(format!("gamma must lie strictly inside (0, 1), got {g}")));
    }
    Ok(gamma)
}

/// Keys: `gamma`, `resample_cap`, `fallback`.
pub(super) fn build_coin(instance: &ProblemInstance, params: &Map<String, Value>) -> Result<Box<dyn Policy>, PolicyError> {
    reject_unknown_keys(params, &["gamma", "resample_cap", "fallback"])?;
    let gamma = parse_gamma(instance, params)?;
    let (cap, fallback) = common_params(params)?;
    Ok(Box::new(TopTwo::new(instance, gamma, GammaRule::Fixed, cap, fallback)?))
}

/// Keys: `gamma` (initial), `schedule`, `resample_cap`, `fallback`.
pub(super) fn build_tune(instance: &ProblemInstance, params: &Map<String, Value>) -> Result<Box<dyn Policy>, PolicyError> {
    reject_unknown_keys(params, &["gamma", "schedule", "resample_cap", "fallback"])?;
    let gamma = parse_gamma(instance, params)?;
    let schedule = parse_param(params, "schedule")?.unwrap_or_else(|| DEFAULT_TUNE_SCHEDULE.to_vec());
    let (cap, fallback) = common_params(params)?;
    Ok(Box::new(TopTwo::new(instance, gamma, GammaRule::Tuned { schedule, next: 0 }, cap, fallback)?))
}
