//! Equal allocation: a fixed cycle through every design.

use serde_json::{Map, Value};

use super::{reject_unknown_keys, Policy, PolicyError, StepContext, StepDecision};
use crate::instance::ProblemInstance;

/// Round-robin over contexts, and within each context over its designs: the
/// cycle visits the `j`-th design of every context that has one before
/// moving to `j + 1`, so each cycle of `|D|` steps samples every design once.
pub struct EqualAllocation {
    order: Vec<(usize, usize)>,
    cursor: usize,
}

impl EqualAllocation {
    pub fn new(instance: &ProblemInstance) -> Self {
        let ranges = instance.context_ranges();
        let widest = ranges.iter().map(|r| r.len()).max().unwrap_or(0);
        let order = (0..widest)
            .flat_map(|j| ranges.iter().enumerate().filter(move |(_, r)| j < r.len()).map(move |(c, r)| (c, r.start + j)))
            .collect();
        EqualAllocation { order, cursor: 0 }
    }
}

impl Policy for EqualAllocation {
    fn kind(&self) -> &'static str {
        "ea"
    }

    fn step(&mut self, _ctx: StepContext<'_>) -> Result<StepDecision, PolicyError> {
        let (c, g) = self.order[self.cursor];
        self.cursor = (self.cursor + 1) % self.order.len();
        Ok(StepDecision::plain(c, g))
    }
}

/// No keys.
pub(super) fn build(instance: &ProblemInstance, params: &Map<String, Value>) -> Result<Box<dyn Policy>, PolicyError> {
    reject_unknown_keys(params, &[])?;
    Ok(Box::new(EqualAllocation::new(instance)))
}
