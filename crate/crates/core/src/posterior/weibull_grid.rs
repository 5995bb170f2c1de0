//! Discretized posterior for right-censored Weibull lifetimes.
//!
//! The parameter space is a rectangular lattice in native coordinates
//! `(rho, k)`; each design keeps the cumulative log-likelihood of every node.
//! The prior is uniform over nodes whose mean `rho * Gamma(1 + 1/k)` lies in
//! the instance's parameter box; other nodes carry weight zero.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use statrs::function::gamma::gamma;

use super::{parse_param, reject_unknown_keys, Moments, ParameterDraw, Posterior, PosteriorError};
use crate::instance::{Family, ProblemInstance, ThetaBox};
use crate::rng::SimRng;

/// Nodes further than this below the heaviest node (in log weight) are
/// treated as having zero mass when sampling; `exp(-40) < 5e-18`.
const LOG_WEIGHT_CUTOFF: f64 = 40.0;

/// Lattice layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rho: [f64; 2],
    pub k: [f64; 2],
    pub n_rho: usize,
    pub n_k: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { rho: [0.1, 200.0], k: [0.1, 20.0], n_rho: 200, n_k: 100 }
    }
}

/// Log-likelihood of one observation: the density `ln f(y; rho, k)` when
/// `y < tau`, the survival `ln S(tau) = -(tau/rho)^k` when `y >= tau`.
pub fn weibull_log_lik(y: f64, rho: f64, k: f64, tau: f64) -> f64 {
    if y >= tau {
        -(tau / rho).powf(k)
    } else {
        k.ln() - rho.ln() + (k - 1.0) * (y / rho).ln() - (y / rho).powf(k)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Per-node constants shared by all designs. Node index is `i * n_k + j` for
/// `rho[i]`, `k[j]`.
struct Tables {
    spec: GridSpec,
    rho: Vec<f64>,
    k: Vec<f64>,
    ln_k: Vec<f64>,
    k_ln_rho: Vec<f64>,
    rho_pow_neg_k: Vec<f64>,
    node_mu: Vec<f64>,
    node_var: Vec<f64>,
    prior: Vec<f64>,
}

impl Tables {
    fn new(spec: GridSpec, theta_box: &ThetaBox) -> Result<Self, PosteriorError> {
        if !(spec.n_rho >= 1 && spec.n_k >= 1 && spec.rho[0] > 0.0 && spec.k[0] > 0.0) {
            return Err(PosteriorError::Config(format!("invalid grid {spec:?}")));
        }
        if !(spec.rho[0] <= spec.rho[1] && spec.k[0] <= spec.k[1]) {
            return Err(PosteriorError::Config(format!("grid ranges reversed {spec:?}")));
        }
        let rho = linspace(spec.rho[0], spec.rho[1], spec.n_rho);
        let k = linspace(spec.k[0], spec.k[1], spec.n_k);
        let n = rho.len() * k.len();
        let mut t = Tables {
            spec,
            ln_k: k.iter().map(|x| x.ln()).collect(),
            k_ln_rho: Vec::with_capacity(n),
            rho_pow_neg_k: Vec::with_capacity(n),
            node_mu: Vec::with_capacity(n),
            node_var: Vec::with_capacity(n),
            prior: Vec::with_capacity(n),
            rho,
            k,
        };
        let g1: Vec<f64> = t.k.iter().map(|&k| gamma(1.0 + 1.0 / k)).collect();
        let g2: Vec<f64> = t.k.iter().map(|&k| gamma(1.0 + 2.0 / k)).collect();
        for &r in &t.rho {
            let ln_r = r.ln();
            for (j, &k) in t.k.iter().enumerate() {
                t.k_ln_rho.push(k * ln_r);
                t.rho_pow_neg_k.push((-k * ln_r).exp());
                let mu = r * g1[j];
                t.node_mu.push(mu);
                t.node_var.push(r * r * (g2[j] - g1[j] * g1[j]));
                let inside = mu >= theta_box.mu[0] && mu <= theta_box.mu[1] && k >= theta_box.eta[0] && k <= theta_box.eta[1];
                t.prior.push(if inside && mu.is_finite() { 0.0 } else { f64::NEG_INFINITY });
            }
        }
        if t.prior.iter().all(|w| *w == f64::NEG_INFINITY) {
            return Err(PosteriorError::Config("no grid node lies inside theta_box".into()));
        }
        Ok(t)
    }

    fn n_nodes(&self) -> usize {
        self.node_mu.len()
    }
}

struct DesignGrid {
    log_w: Vec<f64>,
    cdf: Vec<f64>,
    dirty: bool,
    moments: Moments,
    n_obs: u64,
}

/// Grid posteriors for every design of a censored-Weibull instance.
pub struct WeibullGridModel {
    tables: Arc<Tables>,
    tau: f64,
    designs: Vec<DesignGrid>,
    scratch: Vec<f64>,
}

impl WeibullGridModel {
    pub fn new(n_designs: usize, spec: GridSpec, theta_box: ThetaBox, tau: f64) -> Result<Self, PosteriorError> {
        if !(tau > 0.0) {
            return Err(PosteriorError::Config(format!("censoring time must be positive, got {tau}")));
        }
        let tables = Arc::new(Tables::new(spec, &theta_box)?);
        let designs = (0..n_designs)
            .map(|_| DesignGrid {
                log_w: tables.prior.clone(),
                cdf: vec![0.0; tables.n_nodes()],
                dirty: true,
                moments: Moments { mean_mu: f64::NAN, var_mu: f64::NAN, obs_var: f64::NAN },
                n_obs: 0,
            })
            .collect();
        Ok(WeibullGridModel { scratch: vec![0.0; 2 * tables.k.len()], tables, tau, designs })
    }

    pub fn spec(&self) -> GridSpec {
        self.tables.spec
    }

    pub fn n_nodes(&self) -> usize {
        self.tables.n_nodes()
    }

    /// `(mu, k)` of node `idx`.
    pub fn node(&self, idx: usize) -> ParameterDraw {
        ParameterDraw { mu: self.tables.node_mu[idx], eta: self.tables.k[idx % self.tables.k.len()] }
    }

    /// `(rho, k)` of node `idx`.
    pub fn node_native(&self, idx: usize) -> (f64, f64) {
        let nk = self.tables.k.len();
        (self.tables.rho[idx / nk], self.tables.k[idx % nk])
    }

    pub fn log_weights(&self, design: usize) -> &[f64] {
        &self.designs[design].log_w
    }

    /// Overwrites the log weights of a design (testing and warm starts).
    pub fn set_log_weights(&mut self, design: usize, log_w: &[f64]) -> Result<(), PosteriorError> {
        if log_w.len() != self.n_nodes() {
            return Err(PosteriorError::Config(format!("expected {} weights, got {}", self.n_nodes(), log_w.len())));
        }
        let d = &mut self.designs[design];
        d.log_w.copy_from_slice(log_w);
        d.dirty = true;
        Ok(())
    }

    /// Normalized node probabilities of a design.
    pub fn probabilities(&mut self, design: usize) -> Result<Vec<f64>, PosteriorError> {
        self.refresh(design)?;
        let cdf = &self.designs[design].cdf;
        let total = *cdf.last().expect("non-empty grid");
        let mut prev = 0.0;
        Ok(cdf
            .iter()
            .map(|&c| {
                let p = (c - prev) / total;
                prev = c;
                p
            })
            .collect())
    }

    fn refresh(&mut self, design: usize) -> Result<(), PosteriorError> {
        let t = &self.tables;
        let d = &mut self.designs[design];
        if !d.dirty {
            return Ok(());
        }
        let max = d.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(PosteriorError::NoFiniteWeight(design));
        }
        let floor = max - LOG_WEIGHT_CUTOFF;
        let (mut acc, mut s1, mut s2, mut sv) = (0.0, 0.0, 0.0, 0.0);
        for (i, (&lw, c)) in d.log_w.iter().zip(d.cdf.iter_mut()).enumerate() {
            if lw > floor {
                let w = (lw - max).exp();
                acc += w;
                let mu = t.node_mu[i];
                s1 += w * mu;
                s2 += w * mu * mu;
                sv += w * t.node_var[i];
            }
            *c = acc;
        }
        let mean = s1 / acc;
        d.moments = Moments { mean_mu: mean, var_mu: (s2 / acc - mean * mean).max(0.0), obs_var: sv / acc };
        d.dirty = false;
        Ok(())
    }
}

impl Posterior for WeibullGridModel {
    fn model(&self) -> &'static str {
        "weibull-grid"
    }

    fn n_designs(&self) -> usize {
        self.designs.len()
    }

    fn observe(&mut self, design: usize, value: f64) -> Result<(), PosteriorError> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(PosteriorError::BadObservation { design, value, reason: "lifetimes must be positive" });
        }
        let t = &self.tables;
        let nk = t.k.len();
        let d = &mut self.designs[design];
        // Per shape k: increment = a_k - k ln(rho) - s_k rho^-k, where
        // censored: a_k = 0, k ln(rho) unused, s_k = tau^k;
        // observed: a_k = ln k + (k - 1) ln y, s_k = y^k.
        let censored = value >= self.tau;
        let ln_y = value.min(self.tau).ln();
        let (offset, scale) = self.scratch.split_at_mut(nk);
        for j in 0..nk {
            let k = t.k[j];
            offset[j] = if censored { 0.0 } else { t.ln_k[j] + (k - 1.0) * ln_y };
            scale[j] = (k * ln_y).exp();
        }
        let rows = d.log_w.chunks_exact_mut(nk).zip(t.k_ln_rho.chunks_exact(nk)).zip(t.rho_pow_neg_k.chunks_exact(nk));
        if censored {
            for ((lw, _), rpk) in rows {
                for ((w, &s), &r) in lw.iter_mut().zip(scale.iter()).zip(rpk) {
                    *w -= s * r;
                }
            }
        } else {
            for ((lw, klr), rpk) in rows {
                for ((((w, &a), &s), &l), &r) in lw.iter_mut().zip(offset.iter()).zip(scale.iter()).zip(klr).zip(rpk) {
                    *w += a - l - s * r;
                }
            }
        }
        d.dirty = true;
        d.n_obs += 1;
        Ok(())
    }

    fn sample(&mut self, design: usize, rng: &mut SimRng) -> Result<ParameterDraw, PosteriorError> {
        self.refresh(design)?;
        let cdf = &self.designs[design].cdf;
        let u = rng.random::<f64>() * cdf[cdf.len() - 1];
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        Ok(self.node(idx))
    }

    fn sample_mu_into(&mut self, rng: &mut SimRng, out: &mut [f64]) -> Result<(), PosteriorError> {
        for (g, slot) in out.iter_mut().enumerate() {
            *slot = self.sample(g, rng)?.mu;
        }
        Ok(())
    }

    fn moments(&mut self, design: usize) -> Moments {
        match self.refresh(design) {
            Ok(()) => self.designs[design].moments,
            Err(_) => Moments { mean_mu: f64::NAN, var_mu: f64::NAN, obs_var: f64::NAN },
        }
    }

    fn snapshot(&mut self) -> Value {
        let moments: Vec<Moments> = (0..self.designs.len()).map(|g| self.moments(g)).collect();
        json!({
            "model": self.model(),
            "grid": self.tables.spec,
            "tau": self.tau,
            "observations": self.designs.iter().map(|d| d.n_obs).collect::<Vec<_>>(),
            "moments": moments,
        })
    }
}

/// Registry constructor. Keys: `grid` (a [`GridSpec`]).
pub(super) fn build(instance: &ProblemInstance, params: &Map<String, Value>) -> Result<Box<dyn Posterior>, PosteriorError> {
    reject_unknown_keys(params, &["grid"])?;
    if instance.family() != Family::WeibullCensored {
        return Err(PosteriorError::Config("weibull-grid requires a weibull-censored instance".into()));
    }
    let spec = parse_param(params, "grid")?.unwrap_or_default();
    let tau = instance.tau().expect("validated weibull instance has tau");
    Ok(Box::new(WeibullGridModel::new(instance.n_designs(), spec, instance.theta_box(), tau)?))
}
