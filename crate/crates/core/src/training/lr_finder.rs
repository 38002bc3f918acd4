use serde::Serialize;

use crate::error::{Error, Result};

const SMOOTHING: f64 = 0.98;

/// Outcome of a learning-rate range test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LrRangeResult {
    /// `(lr, raw loss)` per completed step.
    pub records: Vec<(f64, f64)>,
    /// Bias-corrected exponential moving average of the loss.
    pub smoothed: Vec<f64>,
    /// Learning rate at the steepest smoothed-loss descent.
    pub suggestion: Option<f64>,
    /// Set when a non-finite loss cut the sweep short.
    pub diverged_at: Option<usize>,
}

/// Calls `step(lr)` for `iters` learning rates spaced linearly from `lo` to
/// `hi`. Each call performs one optimization step and returns its loss. The
/// sweep stops at the first non-finite loss, keeping the records so far.
pub fn lr_range_sweep(lo: f64, hi: f64, iters: usize, mut step: impl FnMut(f64) -> Result<f64>) -> Result<LrRangeResult> {
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(Error::param(format!("need 0 < lo <= hi, got {lo} and {hi}")));
    }
    if iters < 2 {
        return Err(Error::param(format!("need at least 2 iterations, got {iters}")));
    }
    let mut records = Vec::with_capacity(iters);
    let mut smoothed = Vec::with_capacity(iters);
    let mut avg = 0.0;
    let mut diverged_at = None;
    for j in 0..iters {
        let lr = lo + (hi - lo) * j as f64 / (iters - 1) as f64;
        let loss = match step(lr) {
            Ok(l) if l.is_finite() => l,
            Ok(_) => {
                diverged_at = Some(j);
                break;
            }
            Err(e) if e.is_numeric() => {
                diverged_at = Some(j);
                break;
            }
            Err(e) => return Err(e),
        };
        avg = SMOOTHING * avg + (1.0 - SMOOTHING) * loss;
        smoothed.push(avg / (1.0 - SMOOTHING.powi(j as i32 + 1)));
        records.push((lr, loss));
    }
    let suggestion = suggest(&records, &smoothed, iters);
    Ok(LrRangeResult { records, smoothed, suggestion, diverged_at })
}

/// Minimum first difference of the smoothed loss, ignoring the final 10% of
/// the planned sweep.
fn suggest(records: &[(f64, f64)], smoothed: &[f64], iters: usize) -> Option<f64> {
    let cutoff = (iters - iters / 10).min(smoothed.len());
    (1..cutoff)
        .map(|j| (j, smoothed[j] - smoothed[j - 1]))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(j, _)| records[j].0)
}
