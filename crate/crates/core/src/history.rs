//! Per-design sample counts and running sufficient statistics.

use serde::Serialize;

use crate::instance::ProblemInstance;

/// One-pass mean and sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Biased variance `m2 / n`; zero before any sample.
    pub fn variance_biased(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64
        }
    }

    /// Unbiased variance `m2 / (n - 1)`; `None` with fewer than two samples.
    pub fn variance_unbiased(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.m2 / (self.n - 1) as f64)
    }
}

/// Allocation record of one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationHistory {
    counts: Vec<u64>,
    context_counts: Vec<u64>,
    context_of: Vec<usize>,
    stats: Vec<RunningStats>,
    total: u64,
}

impl AllocationHistory {
    pub fn new(instance: &ProblemInstance) -> Self {
        let n = instance.n_designs();
        AllocationHistory {
            counts: vec![0; n],
            context_counts: vec![0; instance.n_contexts()],
            context_of: (0..n).map(|g| instance.context_of(g)).collect(),
            stats: vec![RunningStats::default(); n],
            total: 0,
        }
    }

    pub fn record(&mut self, design: usize, value: f64) {
        self.counts[design] += 1;
        self.context_counts[self.context_of[design]] += 1;
        self.stats[design].push(value);
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, design: usize) -> u64 {
        self.counts[design]
    }

    pub fn context_counts(&self) -> &[u64] {
        &self.context_counts
    }

    pub fn stats(&self, design: usize) -> &RunningStats {
        &self.stats[design]
    }

    /// `psi(d) = N(d) / T`.
    pub fn psi(&self, design: usize) -> f64 {
        ratio(self.counts[design], self.total)
    }

    /// `alpha(c) = N(c) / T`.
    pub fn alpha(&self, context: usize) -> f64 {
        ratio(self.context_counts[context], self.total)
    }

    /// `beta(c, d) = N(d) / N(c)`.
    pub fn beta(&self, design: usize) -> f64 {
        ratio(self.counts[design], self.context_counts[self.context_of[design]])
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}
