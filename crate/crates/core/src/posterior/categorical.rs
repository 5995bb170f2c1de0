//! A stand-in belief whose joint draws only encode which design is best in
//! each context: context `c` independently names design `d` best with
//! probability `pi[c][d]`. Used to study the policy in isolation from
//! posterior sampling.

use rand::Rng;
use serde_json::{json, Value};

use super::{Moments, ParameterDraw, Posterior, PosteriorError};
use crate::rng::SimRng;

pub struct CategoricalBest {
    pi: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    n: usize,
}

impl CategoricalBest {
    /// `pi[c]` must be a probability vector over the designs of context `c`.
    pub fn new(pi: Vec<Vec<f64>>) -> Result<Self, PosteriorError> {
        let mut offsets = Vec::with_capacity(pi.len());
        let mut n = 0;
        for (c, p) in pi.iter().enumerate() {
            let total: f64 = p.iter().sum();
            if p.is_empty() || p.iter().any(|&x| !(x >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(PosteriorError::Config(format!("pi[{c}] is not a probability vector")));
            }
            offsets.push(n);
            n += p.len();
        }
        let cumulative = pi
            .iter()
            .map(|p| {
                let mut acc = 0.0;
                p.iter()
                    .map(|&x| {
                        acc += x;
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(CategoricalBest { pi, cumulative, offsets, n })
    }

    pub fn pi(&self) -> &[Vec<f64>] {
        &self.pi
    }

    fn flat(&self, design: usize) -> (usize, usize) {
        let c = self.offsets.partition_point(|&o| o <= design) - 1;
        (c, design - self.offsets[c])
    }
}

impl Posterior for CategoricalBest {
    fn model(&self) -> &'static str {
        "categorical-best"
    }

    fn n_designs(&self) -> usize {
        self.n
    }

    fn observe(&mut self, _design: usize, _value: f64) -> Result<(), PosteriorError> {
        Ok(())
    }

    fn sample(&mut self, design: usize, _rng: &mut SimRng) -> Result<ParameterDraw, PosteriorError> {
        let (c, j) = self.flat(design);
        Ok(ParameterDraw { mu: self.pi[c][j], eta: 1.0 })
    }

    fn sample_mu_into(&mut self, rng: &mut SimRng, out: &mut [f64]) -> Result<(), PosteriorError> {
        out.fill(0.0);
        for (c, cum) in self.cumulative.iter().enumerate() {
            let u = rng.random::<f64>() * cum[cum.len() - 1];
            let j = cum.partition_point(|&x| x <= u).min(cum.len() - 1);
            out[self.offsets[c] + j] = 1.0;
        }
        Ok(())
    }

    fn moments(&mut self, design: usize) -> Moments {
        let (c, j) = self.flat(design);
        Moments { mean_mu: self.pi[c][j], var_mu: 0.0, obs_var: 1.0 }
    }

    fn snapshot(&mut self) -> Value {
        json!({ "model": self.model(), "pi": self.pi })
    }
}
