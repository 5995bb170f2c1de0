//! Problem instances: contexts, their disjoint design sets, the true sampling
//! distributions and the top-m targets.

use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ranking::top_m;
use crate::rng::{self, SimRng};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("unknown context index {0}")]
    UnknownContext(usize),
    #[error("unknown design index {0}")]
    UnknownDesign(usize),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("malformed design id {0:?} (expected c<i>_d<j>)")]
    BadDesignId(String),
    #[error("instance json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("instance io: {0}")]
    Io(#[from] std::io::Error),
}

/// A design is addressed by its context index and its position within the
/// context. Serialized as `c<i>_d<j>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DesignId {
    pub context: usize,
    pub local: usize,
}

impl fmt::Display for DesignId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}_d{}", self.context, self.local)
    }
}

impl FromStr for DesignId {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InstanceError::BadDesignId(s.to_string());
        let rest = s.strip_prefix('c').ok_or_else(bad)?;
        let (c, d) = rest.split_once("_d").ok_or_else(bad)?;
        Ok(DesignId {
            context: c.parse().map_err(|_| bad())?,
            local: d.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `Y ~ N(mu, eta)`; `eta` is the variance.
    Gaussian,
    /// Weibull lifetime with mean `mu` and shape `eta`, right-censored at `tau`.
    WeibullCensored,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::WeibullCensored => "weibull-censored",
        })
    }
}

/// Compact parameter box `[mu_lo, mu_hi] x [eta_lo, eta_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaBox {
    pub mu: [f64; 2],
    pub eta: [f64; 2],
}

impl ThetaBox {
    pub fn contains(&self, mu: f64, eta: f64) -> bool {
        mu >= self.mu[0] && mu <= self.mu[1] && eta >= self.eta[0] && eta <= self.eta[1]
    }

    pub fn strictly_contains(&self, mu: f64, eta: f64) -> bool {
        mu > self.mu[0] && mu < self.mu[1] && eta > self.eta[0] && eta < self.eta[1]
    }
}

/// Ground-truth parameters of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design {
    pub id: DesignId,
    pub mu: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub design: usize,
    pub value: f64,
}

/// Weibull scale giving mean `mu` at shape `k`.
pub fn weibull_scale_for_mean(mu: f64, k: f64) -> f64 {
    mu / statrs::function::gamma::gamma(1.0 + 1.0 / k)
}

/// Weibull mean for scale `rho` and shape `k`.
pub fn weibull_mean(rho: f64, k: f64) -> f64 {
    rho * statrs::function::gamma::gamma(1.0 + 1.0 / k)
}

/// Inverse-CDF draw `rho * (-ln u)^(1/k)` for `u` in (0, 1].
pub fn weibull_from_uniform(rho: f64, k: f64, u: f64) -> f64 {
    rho * (-u.ln()).powf(1.0 / k)
}

/// Default censoring horizon for the generated Weibull instance.
pub const DEFAULT_WEIBULL_TAU: f64 = 150.0;

/// The fixed world being simulated.
///
/// Designs are stored contiguously by context, so a design's global index is
/// its position in [`ProblemInstance::designs`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    family: Family,
    contexts: Vec<String>,
    designs: Vec<Design>,
    ranges: Vec<Range<usize>>,
    m: Vec<usize>,
    tau: Option<f64>,
    theta_box: ThetaBox,
}

impl ProblemInstance {
    /// Builds and validates an instance. `params[c]` lists `(mu, eta)` for the
    /// designs of context `c`.
    pub fn new(
        family: Family,
        params: Vec<Vec<(f64, f64)>>,
        m: Vec<usize>,
        tau: Option<f64>,
        theta_box: ThetaBox,
    ) -> Result<Self, InstanceError> {
        let contexts = (0..params.len()).map(|c| format!("c{c}")).collect();
        let mut designs = Vec::new();
        let mut ranges = Vec::with_capacity(params.len());
        for (c, ds) in params.iter().enumerate() {
            let start = designs.len();
            for (j, &(mu, eta)) in ds.iter().enumerate() {
                designs.push(Design { id: DesignId { context: c, local: j }, mu, eta });
            }
            ranges.push(start..designs.len());
        }
        let inst = ProblemInstance { family, contexts, designs, ranges, m, tau, theta_box };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<(), InstanceError> {
        let invalid = |msg: String| Err(InstanceError::Invalid(msg));
        if self.contexts.is_empty() {
            return invalid("no contexts".into());
        }
        if self.m.len() != self.contexts.len() {
            return invalid(format!("m has {} entries for {} contexts", self.m.len(), self.contexts.len()));
        }
        for (c, r) in self.ranges.iter().enumerate() {
            if r.is_empty() {
                return invalid(format!("context {c} has no designs"));
            }
            if self.m[c] < 1 || self.m[c] > r.len() {
                return invalid(format!("m[{c}] = {} outside 1..={}", self.m[c], r.len()));
            }
            let ds = &self.designs[r.clone()];
            for (i, a) in ds.iter().enumerate() {
                for b in &ds[i + 1..] {
                    if a.mu == b.mu {
                        return invalid(format!("designs {} and {} share mu = {}", a.id, b.id, a.mu));
                    }
                }
            }
        }
        let b = &self.theta_box;
        if !(b.mu[0] < b.mu[1] && b.eta[0] < b.eta[1]) {
            return invalid("empty theta_box".into());
        }
        for d in &self.designs {
            if !(d.mu.is_finite() && d.eta.is_finite()) {
                return invalid(format!("design {} has non-finite parameters", d.id));
            }
            if !b.strictly_contains(d.mu, d.eta) {
                return invalid(format!("design {} lies outside the interior of theta_box", d.id));
            }
            if d.eta <= 0.0 {
                return invalid(format!("design {} has non-positive nuisance parameter", d.id));
            }
        }
        match (self.family, self.tau) {
            (Family::WeibullCensored, Some(t)) if t > 0.0 && t.is_finite() => {}
            (Family::WeibullCensored, _) => return invalid("weibull-censored needs a finite tau > 0".into()),
            (Family::Gaussian, _) => {}
        }
        Ok(())
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn contexts(&self) -> &[String] {
        &self.contexts
    }

    pub fn n_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn designs(&self) -> &[Design] {
        &self.designs
    }

    pub fn n_designs(&self) -> usize {
        self.designs.len()
    }

    pub fn design(&self, g: usize) -> Result<&Design, InstanceError> {
        self.designs.get(g).ok_or(InstanceError::UnknownDesign(g))
    }

    /// Global index range of the designs of context `c`.
    pub fn context_range(&self, c: usize) -> Range<usize> {
        self.ranges[c].clone()
    }

    pub fn context_ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn context_of(&self, g: usize) -> usize {
        self.designs[g].id.context
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    pub fn theta_box(&self) -> ThetaBox {
        self.theta_box
    }

    /// A copy with a different target size in every context.
    pub fn with_m(&self, m: Vec<usize>) -> Result<Self, InstanceError> {
        let mut next = self.clone();
        next.m = m;
        next.validate()?;
        Ok(next)
    }

    /// Global indices of the `m_c` designs of context `c` with the largest `mu`,
    /// ascending.
    pub fn true_top_m(&self, c: usize) -> Result<Vec<usize>, InstanceError> {
        let r = self.ranges.get(c).ok_or(InstanceError::UnknownContext(c))?;
        let mus: Vec<f64> = self.designs[r.clone()].iter().map(|d| d.mu).collect();
        Ok(top_m(&mus, self.m[c]).into_iter().map(|j| r.start + j).collect())
    }

    /// One observation of design `g`.
    pub fn simulate(&self, g: usize, rng: &mut SimRng) -> Result<Observation, InstanceError> {
        let d = self.design(g)?;
        let value = match self.family {
            Family::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                d.mu + d.eta.sqrt() * z
            }
            Family::WeibullCensored => {
                let rho = weibull_scale_for_mean(d.mu, d.eta);
                // (0, 1]: ln(0) is excluded.
                let u = 1.0 - rng.random::<f64>();
                let w = weibull_from_uniform(rho, d.eta, u);
                w.min(self.tau.expect("validated"))
            }
        };
        Ok(Observation { design: g, value })
    }

    pub fn to_json(&self) -> Result<String, InstanceError> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(s)?;
        file.try_into()
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// On-disk layout of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub family: Family,
    pub contexts: Vec<String>,
    pub designs: Vec<DesignRecord>,
    pub m: Vec<usize>,
    pub tau: Option<f64>,
    pub theta_box: ThetaBox,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRecord {
    pub context: String,
    pub id: String,
    pub mu: f64,
    pub eta: f64,
}

impl From<&ProblemInstance> for InstanceFile {
    fn from(inst: &ProblemInstance) -> Self {
        InstanceFile {
            family: inst.family,
            contexts: inst.contexts.clone(),
            designs: inst
                .designs
                .iter()
                .map(|d| DesignRecord {
                    context: inst.contexts[d.id.context].clone(),
                    id: d.id.to_string(),
                    mu: d.mu,
                    eta: d.eta,
                })
                .collect(),
            m: inst.m.clone(),
            tau: inst.tau,
            theta_box: inst.theta_box,
        }
    }
}

impl TryFrom<InstanceFile> for ProblemInstance {
    type Error = InstanceError;

    fn try_from(file: InstanceFile) -> Result<Self, Self::Error> {
        let mut params: Vec<Vec<(f64, f64)>> = vec![Vec::new(); file.contexts.len()];
        for rec in &file.designs {
            let id: DesignId = rec.id.parse()?;
            let c = file
                .contexts
                .iter()
                .position(|n| *n == rec.context)
                .ok_or_else(|| InstanceError::Invalid(format!("design {} names unknown context {:?}", rec.id, rec.context)))?;
            if id.context != c || id.local != params[c].len() {
                return Err(InstanceError::Invalid(format!(
                    "design {} out of order (expected c{}_d{})",
                    rec.id,
                    c,
                    params[c].len()
                )));
            }
            params[c].push((rec.mu, rec.eta));
        }
        let mut inst = ProblemInstance::new(file.family, params, file.m, file.tau, file.theta_box)?;
        inst.contexts = file.contexts;
        Ok(inst)
    }
}

/// Box used for generated Gaussian instances: wide enough that posterior
/// draws are essentially never truncated.
pub const GAUSSIAN_THETA_BOX: ThetaBox = ThetaBox { mu: [-1.0e3, 1.0e3], eta: [1.0e-6, 1.0e6] };

/// Synthetic Gaussian instance: `mu ~ N(0, 10)` (variance 10), `sigma ~ U[4, 6]`.
pub fn generate_gaussian_instance(
    seed: u64,
    n_contexts: usize,
    n_designs: usize,
    m: usize,
) -> Result<ProblemInstance, InstanceError> {
    if n_contexts == 0 || n_designs == 0 || m == 0 || m > n_designs {
        return Err(InstanceError::Invalid(format!(
            "need n_contexts, n_designs >= 1 and 1 <= m <= n_designs (got {n_contexts}, {n_designs}, {m})"
        )));
    }
    let mut rng = rng::from_seed(seed);
    let mean = Normal::new(0.0, 10f64.sqrt()).expect("valid normal");
    let sd = Uniform::new(4.0, 6.0).expect("valid range");
    let params = (0..n_contexts)
        .map(|_| {
            let mut ds: Vec<(f64, f64)> = Vec::with_capacity(n_designs);
            while ds.len() < n_designs {
                let mu = mean.sample(&mut rng);
                let s: f64 = sd.sample(&mut rng);
                if ds.iter().any(|&(v, _)| v == mu) {
                    continue;
                }
                ds.push((mu, s * s));
            }
            ds
        })
        .collect();
    ProblemInstance::new(Family::Gaussian, params, vec![m; n_contexts], None, GAUSSIAN_THETA_BOX)
}

/// Context sizes and targets of the production-line instance.
pub const WEIBULL_CONTEXT_SIZES: [usize; 5] = [5, 5, 7, 6, 7];
pub const WEIBULL_TARGETS: [usize; 5] = [1, 1, 1, 2, 2];

/// Production-line instance with the default censoring horizon.
pub fn generate_weibull_instance(seed: u64) -> Result<ProblemInstance, InstanceError> {
    generate_weibull_instance_with_tau(seed, DEFAULT_WEIBULL_TAU)
}

/// Production-line instance: `mu ~ U[90, 110]`, shape `k ~ U[2, 4]`,
/// `theta_box = [0, 200] x [0, 20]`.
pub fn generate_weibull_instance_with_tau(seed: u64, tau: f64) -> Result<ProblemInstance, InstanceError> {
    let mut rng = rng::from_seed(seed);
    let mean = Uniform::new(90.0, 110.0).expect("valid range");
    let shape = Uniform::new(2.0, 4.0).expect("valid range");
    let params = WEIBULL_CONTEXT_SIZES
        .iter()
        .map(|&n| {
            let mut ds: Vec<(f64, f64)> = Vec::with_capacity(n);
            while ds.len() < n {
                let mu: f64 = mean.sample(&mut rng);
                let k: f64 = shape.sample(&mut rng);
                if ds.iter().any(|&(v, _)| v == mu) {
                    continue;
                }
                ds.push((mu, k));
            }
            ds
        })
        .collect();
    ProblemInstance::new(
        Family::WeibullCensored,
        params,
        WEIBULL_TARGETS.to_vec(),
        Some(tau),
        ThetaBox { mu: [0.0, 200.0], eta: [0.0, 20.0] },
    )
}
