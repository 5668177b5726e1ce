//! Robust per-row scaling of trajectory matrices.
//!
//! Optimizer-generated trajectories carry outliers, so rows are centered by
//! the median and scaled by the interquartile range rather than mean/std.
//! Rows with zero spread (constants) fall back to a spread of one.

use crate::plan::{TrajectoryPlan, PLAN_ROWS};
use serde::{Deserialize, Serialize};

/// Per-row center (median) and spread (IQR) fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustScale {
    pub center: [f64; PLAN_ROWS],
    pub spread: [f64; PLAN_ROWS],
}

/// Linear-interpolation percentile (the numpy/sklearn default) on sorted data.
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let idx = p / 100.0 * (n - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    let frac = idx - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Median / IQR of one row of values.
pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = percentile_sorted(&sorted, 50.0);
    let iqr = percentile_sorted(&sorted, 75.0) - percentile_sorted(&sorted, 25.0);
    (median, iqr)
}

pub fn fit_scale(dataset: &[TrajectoryPlan]) -> Result<RobustScale, ScaleError> {
    if dataset.is_empty() {
        return Err(ScaleError::EmptyDataset);
    }
    let mut center = [0.0; PLAN_ROWS];
    let mut spread = [1.0; PLAN_ROWS];
    for row in 0..PLAN_ROWS {
        let mut values = Vec::with_capacity(dataset.len() * dataset[0].nodes());
        for plan in dataset {
            for k in 0..plan.nodes() {
                values.push(plan.get(row, k));
            }
        }
        let (med, iqr) = median_iqr(&values);
        center[row] = med;
        spread[row] = if iqr > 0.0 { iqr } else { 1.0 };
    }
    Ok(RobustScale { center, spread })
}

impl RobustScale {
    pub fn identity() -> Self {
        Self {
            center: [0.0; PLAN_ROWS],
            spread: [1.0; PLAN_ROWS],
        }
    }

    pub fn scale(&self, plan: &TrajectoryPlan) -> TrajectoryPlan {
        let mut out = plan.clone();
        for row in 0..PLAN_ROWS {
            for k in 0..plan.nodes() {
                out.set(row, k, (plan.get(row, k) - self.center[row]) / self.spread[row]);
            }
        }
        out
    }

    pub fn unscale(&self, plan: &TrajectoryPlan) -> TrajectoryPlan {
        let mut out = plan.clone();
        for row in 0..PLAN_ROWS {
            for k in 0..plan.nodes() {
                out.set(row, k, plan.get(row, k) * self.spread[row] + self.center[row]);
            }
        }
        out
    }

    pub fn scale_value(&self, row: usize, v: f64) -> f64 {
        (v - self.center[row]) / self.spread[row]
    }

    pub fn unscale_value(&self, row: usize, v: f64) -> f64 {
        v * self.spread[row] + self.center[row]
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScaleError {
    #[error("cannot fit a scale on an empty dataset")]
    EmptyDataset,
}
