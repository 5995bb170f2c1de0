//! Probability-of-correct-selection estimates across replications.

use serde::Serialize;

use super::ReplicationRecord;

/// Estimates at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointMetrics {
    pub checkpoint: u64,
    /// Fraction of replications correct in every context.
    pub pcs: f64,
    pub pcs_se: f64,
    /// Smallest per-context fraction of correct replications.
    pub pcsw: f64,
    pub pcsw_se: f64,
    /// Weighted average of the per-context fractions.
    pub pcse: f64,
    pub pcse_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsCurve {
    pub policy: String,
    pub reps: usize,
    /// Standard errors need at least two replications; with one they are
    /// reported as 0.
    pub se_defined: bool,
    pub points: Vec<CheckpointMetrics>,
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Aggregates replication records in replication order, so the result does
/// not depend on how replications were scheduled.
pub fn aggregate(policy: &str, checkpoints: &[u64], weights: &[f64], records: &[ReplicationRecord]) -> MetricsCurve {
    let reps = records.len();
    let n = reps.max(1) as f64;
    let points = checkpoints
        .iter()
        .enumerate()
        .map(|(k, &checkpoint)| {
            let mut all = 0usize;
            let mut per_context = vec![0usize; weights.len()];
            let mut scores = Vec::with_capacity(reps);
            for r in records {
                let row = &r.correct[k];
                all += row.iter().all(|&x| x) as usize;
                for (c, &x) in row.iter().enumerate() {
                    per_context[c] += x as usize;
                }
                scores.push(row.iter().zip(weights).map(|(&x, w)| if x { *w } else { 0.0 }).sum::<f64>());
            }
            let pcs = all as f64 / n;
            let fractions: Vec<f64> = per_context.iter().map(|&k| k as f64 / n).collect();
            let worst = (0..fractions.len())
                .min_by(|&a, &b| fractions[a].total_cmp(&fractions[b]))
                .unwrap_or(0);
            let pcsw = fractions.get(worst).copied().unwrap_or(1.0);
            let pcse = scores.iter().sum::<f64>() / n;
            let var = scores.iter().map(|s| (s - pcse).powi(2)).sum::<f64>() / n;
            CheckpointMetrics {
                checkpoint,
                pcs,
                pcs_se: binomial_se(pcs, reps.max(1)),
                pcsw,
                pcsw_se: binomial_se(pcsw, reps.max(1)),
                pcse,
                pcse_se: (var / n).sqrt(),
            }
        })
        .collect();
    MetricsCurve { policy: policy.to_string(), reps, se_defined: reps >= 2, points }
}
