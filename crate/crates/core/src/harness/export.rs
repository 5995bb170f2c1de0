//! CSV export of metric curves.

use std::io::Write;

use super::{HarnessError, MetricsCurve};

pub const CSV_HEADER: [&str; 9] = ["policy", "checkpoint", "pcs", "pcs_se", "pcsw", "pcsw_se", "pcse", "pcse_se", "reps"];

/// Fixed-point decimal with 10 significant digits (`0` for zero).
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let decimals = (9 - x.abs().log10().floor() as i64).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Writes one row per (policy, checkpoint), policies in the given order.
pub fn write_csv<W: Write>(curves: &[MetricsCurve], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for curve in curves {
        for p in &curve.points {
            w.write_record([
                curve.policy.clone(),
                p.checkpoint.to_string(),
                format_sig10(p.pcs),
                format_sig10(p.pcs_se),
                format_sig10(p.pcsw),
                format_sig10(p.pcsw_se),
                format_sig10(p.pcse),
                format_sig10(p.pcse_se),
                curve.reps.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
