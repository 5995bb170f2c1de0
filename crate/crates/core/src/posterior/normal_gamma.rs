//! Normal-Gamma conjugate model for Gaussian observations with unknown mean
//! and variance: precision `1/sigma^2 ~ Gamma(shape a, rate b)` and
//! `mu | sigma^2 ~ N(m, sigma^2 / n)`.

use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{parse_param, reject_unknown_keys, Moments, ParameterDraw, Posterior, PosteriorError};
use crate::history::RunningStats;
use crate::instance::{Family, ProblemInstance, ThetaBox};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalGammaState {
    pub m: f64,
    pub n: f64,
    pub a: f64,
    pub b: f64,
}

/// Near-uninformative prior that is proper after one observation.
pub const DEFAULT_NG_PRIOR: NormalGammaState = NormalGammaState { m: 0.0, n: 1e-3, a: 1e-3, b: 1e-3 };

/// Draws allowed per design before a theta_box rejection is reported.
pub const DEFAULT_REJECTION_BUDGET: usize = 1000;

impl NormalGammaState {
    /// Conjugate update by a single observation.
    pub fn updated(&self, y: f64) -> Self {
        let n1 = self.n + 1.0;
        NormalGammaState {
            m: (self.n * self.m + y) / n1,
            n: n1,
            a: self.a + 0.5,
            b: self.b + 0.5 * self.n * (y - self.m).powi(2) / n1,
        }
    }

    /// Posterior mean of `mu`.
    pub fn mean_mu(&self) -> f64 {
        self.m
    }

    /// Variance of the Student-t marginal of `mu`; infinite while `a <= 1`.
    pub fn var_mu(&self) -> f64 {
        if self.a > 1.0 {
            self.b / (self.n * (self.a - 1.0))
        } else {
            f64::INFINITY
        }
    }

    /// Posterior mean of `sigma^2`; infinite while `a <= 1`.
    pub fn mean_sigma2(&self) -> f64 {
        if self.a > 1.0 {
            self.b / (self.a - 1.0)
        } else {
            f64::INFINITY
        }
    }
}

/// Batch update of `prior` by data summarized in `stats`:
///
/// `m = (n0 m0 + N ybar)/(n0 + N)`, `n = n0 + N`, `a = a0 + N/2`,
/// `b = b0 + (N/2) (s^2 + n0 (ybar - m0)^2 / (n0 + N))` with `s^2` the biased
/// sample variance.
pub fn ng_posterior(prior: &NormalGammaState, stats: &RunningStats) -> NormalGammaState {
    if stats.n == 0 {
        return *prior;
    }
    let big_n = stats.n as f64;
    let n = prior.n + big_n;
    NormalGammaState {
        m: (prior.n * prior.m + big_n * stats.mean) / n,
        n,
        a: prior.a + 0.5 * big_n,
        b: prior.b + 0.5 * (stats.m2 + big_n * prior.n * (stats.mean - prior.m).powi(2) / n),
    }
}

struct DesignBelief {
    stats: RunningStats,
    state: NormalGammaState,
    precision: Gamma<f64>,
}

impl DesignBelief {
    fn new(prior: &NormalGammaState) -> Self {
        DesignBelief { stats: RunningStats::default(), state: *prior, precision: gamma_of(prior) }
    }
}

fn gamma_of(s: &NormalGammaState) -> Gamma<f64> {
    Gamma::new(s.a, 1.0 / s.b).expect("shape and rate are positive")
}

/// Independent Normal-Gamma beliefs for every design, truncated to a box by
/// rejection.
pub struct NormalGammaModel {
    prior: NormalGammaState,
    theta_box: ThetaBox,
    budget: usize,
    beliefs: Vec<DesignBelief>,
}

impl NormalGammaModel {
    pub fn new(
        n_designs: usize,
        prior: NormalGammaState,
        theta_box: ThetaBox,
        budget: usize,
    ) -> Result<Self, PosteriorError> {
        if !(prior.n > 0.0 && prior.a > 0.0 && prior.b > 0.0 && prior.m.is_finite()) {
            return Err(PosteriorError::Config(format!("invalid normal-gamma prior {prior:?}")));
        }
        if budget == 0 {
            return Err(PosteriorError::Config("rejection budget must be at least 1".into()));
        }
        Ok(NormalGammaModel {
            prior,
            theta_box,
            budget,
            beliefs: (0..n_designs).map(|_| DesignBelief::new(&prior)).collect(),
        })
    }

    pub fn state(&self, design: usize) -> &NormalGammaState {
        &self.beliefs[design].state
    }

    pub fn prior(&self) -> &NormalGammaState {
        &self.prior
    }
}

impl Posterior for NormalGammaModel {
    fn model(&self) -> &'static str {
        "normal-gamma"
    }

    fn n_designs(&self) -> usize {
        self.beliefs.len()
    }

    fn observe(&mut self, design: usize, value: f64) -> Result<(), PosteriorError> {
        if !value.is_finite() {
            return Err(PosteriorError::BadObservation { design, value, reason: "not finite" });
        }
        let belief = &mut self.beliefs[design];
        belief.stats.push(value);
        belief.state = ng_posterior(&self.prior, &belief.stats);
        belief.precision = gamma_of(&belief.state);
        Ok(())
    }

    fn sample(&mut self, design: usize, rng: &mut SimRng) -> Result<ParameterDraw, PosteriorError> {
        let belief = &self.beliefs[design];
        let s = &belief.state;
        for _ in 0..self.budget {
            let lambda = belief.precision.sample(rng);
            let var = 1.0 / lambda;
            let z: f64 = StandardNormal.sample(rng);
            let mu = s.m + (var / s.n).sqrt() * z;
            if self.theta_box.contains(mu, var) {
                return Ok(ParameterDraw { mu, eta: var });
            }
        }
        Err(PosteriorError::RejectionExhausted { design, budget: self.budget })
    }

    fn moments(&mut self, design: usize) -> Moments {
        let s = &self.beliefs[design].state;
        Moments { mean_mu: s.mean_mu(), var_mu: s.var_mu(), obs_var: s.mean_sigma2() }
    }

    fn snapshot(&mut self) -> Value {
        json!({
            "model": self.model(),
            "prior": self.prior,
            "states": self.beliefs.iter().map(|b| b.state).collect::<Vec<_>>(),
        })
    }
}

/// Registry constructor. Keys: `prior` (`[m0, n0, a0, b0]`), `rejection_budget`.
///
/// On non-Gaussian instances the nuisance bound of the instance box refers to
/// another parameterization, so only the `mu` bounds are enforced.
pub(super) fn build(instance: &ProblemInstance, params: &Map<String, Value>) -> Result<Box<dyn Posterior>, PosteriorError> {
    reject_unknown_keys(params, &["prior", "rejection_budget"])?;
    let prior = match parse_param::<[f64; 4]>(params, "prior")? {
        Some([m, n, a, b]) => NormalGammaState { m, n, a, b },
        None => DEFAULT_NG_PRIOR,
    };
    let budget = parse_param(params, "rejection_budget")?.unwrap_or(DEFAULT_REJECTION_BUDGET);
    let mut theta_box = instance.theta_box();
    if instance.family() != Family::Gaussian {
        theta_box.eta = [0.0, f64::INFINITY];
    }
    Ok(Box::new(NormalGammaModel::new(instance.n_designs(), prior, theta_box, budget)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn stats_of(xs: &[f64]) -> RunningStats {
        let mut s = RunningStats::default();
        xs.iter().for_each(|&x| s.push(x));
        s
    }

    const UNIT: NormalGammaState = NormalGammaState { m: 0.0, n: 1.0, a: 1.0, b: 1.0 };

    fn close(a: &NormalGammaState, b: &NormalGammaState, tol: f64) -> bool {
        (a.m - b.m).abs() <= tol && (a.n - b.n).abs() <= tol && (a.a - b.a).abs() <= tol && (a.b - b.b).abs() <= tol
    }

    #[test]
    fn two_ones_from_unit_prior() {
        let want = NormalGammaState { m: 2.0 / 3.0, n: 3.0, a: 2.0, b: 4.0 / 3.0 };
        assert!(close(&ng_posterior(&UNIT, &stats_of(&[1.0, 1.0])), &want, 1e-15));
        assert!(close(&UNIT.updated(1.0).updated(1.0), &want, 1e-15));
    }

    #[test]
    fn zero_observations_is_identity() {
        assert_eq!(ng_posterior(&UNIT, &RunningStats::default()), UNIT);
    }

    #[test]
    fn single_zero_observation() {
        let want = NormalGammaState { m: 0.0, n: 2.0, a: 1.5, b: 1.0 };
        assert_eq!(ng_posterior(&UNIT, &stats_of(&[0.0])), want);
        assert_eq!(UNIT.updated(0.0), want);
    }

    #[test]
    fn concentrated_state_draws_near_mode() {
        let mut model = NormalGammaModel::new(1, UNIT, ThetaBox { mu: [-1e3, 1e3], eta: [0.0, 1e3] }, 1000).unwrap();
        model.beliefs[0].state = NormalGammaState { m: 3.0, n: 1e12, a: 1e12, b: 2e12 };
        model.beliefs[0].precision = gamma_of(&model.beliefs[0].state);
        let mut r = rng::from_seed(3);
        for _ in 0..100 {
            let d = model.sample(0, &mut r).unwrap();
            assert!((d.mu - 3.0).abs() < 1e-4);
            assert!((d.eta - 2.0).abs() < 1e-4);
        }
    }

    #[test]
    fn narrow_box_exhausts_budget() {
        let mut model = NormalGammaModel::new(1, UNIT, ThetaBox { mu: [50.0, 51.0], eta: [0.0, 1.0] }, 10).unwrap();
        let mut r = rng::from_seed(1);
        assert!(matches!(model.sample(0, &mut r), Err(PosteriorError::RejectionExhausted { .. })));
    }
}
