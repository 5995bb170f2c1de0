//! The final selection decision: estimated top set of every context.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::instance::ProblemInstance;
use crate::posterior::{Posterior, PosteriorError};
use crate::ranking::top_m;
use crate::rng::SimRng;

/// Posterior draws used by the Bayes decision unless configured otherwise.
pub const DEFAULT_BAYES_DRAWS: usize = 1000;

fn default_draws() -> usize {
    DEFAULT_BAYES_DRAWS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SelectionMode {
    /// Top-`m_c` designs by posterior mean.
    #[default]
    Plugin,
    /// Per context, the set that is the top set most often among `draws`
    /// joint posterior draws. The posterior factorizes over contexts, so the
    /// joint maximizer is the product of per-context maximizers.
    Bayes {
        #[serde(default = "default_draws")]
        draws: usize,
    },
}

/// Selected set of every context, as sorted global design indices. Ties in
/// Bayes mode go to the plugin set when it is among the most frequent, and
/// otherwise to the lexicographically smallest set.
pub fn select_final(
    posterior: &mut dyn Posterior,
    instance: &ProblemInstance,
    mode: SelectionMode,
    rng: &mut SimRng,
) -> Result<Vec<Vec<usize>>, PosteriorError> {
    let means: Vec<f64> = (0..instance.n_designs()).map(|g| posterior.moments(g).mean_mu).collect();
    let plugin: Vec<Vec<usize>> = instance
        .context_ranges()
        .iter()
        .enumerate()
        .map(|(c, r)| top_m(&means[r.clone()], instance.m()[c]).into_iter().map(|j| r.start + j).collect())
        .collect();
    let draws = match mode {
        SelectionMode::Plugin => return Ok(plugin),
        SelectionMode::Bayes { draws } => draws.max(1),
    };
    let mut freq: Vec<BTreeMap<Vec<usize>, usize>> = vec![BTreeMap::new(); instance.n_contexts()];
    let mut mu = vec![0.0; instance.n_designs()];
    for _ in 0..draws {
        posterior.sample_mu_into(rng, &mut mu)?;
        for (c, r) in instance.context_ranges().iter().enumerate() {
            let set: Vec<usize> = top_m(&mu[r.clone()], instance.m()[c]).into_iter().map(|j| r.start + j).collect();
            *freq[c].entry(set).or_default() += 1;
        }
    }
    Ok(freq
        .into_iter()
        .zip(plugin)
        .map(|(f, plug)| {
            let best = f.values().copied().max().unwrap_or(0);
            if f.get(&plug) == Some(&best) {
                plug
            } else {
                f.into_iter().find(|(_, n)| *n == best).map(|(s, _)| s).unwrap_or(plug)
            }
        })
        .collect())
}
