//! Count fusion and dataset metrics.

use serde::{Deserialize, Serialize};

use crate::detect::DetectionSet;
use crate::error::{Error, Result};

/// Label used for the square-rooted error in reports.
pub const MSE_LABEL: &str = "MSE (RMSE form)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEstimate {
    pub scene_id: String,
    pub near_count: usize,
    pub far_count: f64,
    pub total: f64,
    pub ground_truth: f64,
}

impl SceneEstimate {
    pub fn abs_error(&self) -> f64 {
        (self.ground_truth - self.total).abs()
    }
}

/// Near count is the number of kept boxes; the total is not rounded.
pub fn fuse(kept: &DetectionSet, far_count: f64) -> Result<(usize, f64)> {
    if !(far_count >= 0.0) || !far_count.is_finite() {
        return Err(Error::Invalid(format!("far count must be finite and >= 0, got {far_count}")));
    }
    let near = kept.len();
    Ok((near, near as f64 + far_count))
}

fn check_pairs(pairs: &[(f64, f64)]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::Invalid("metrics need at least one scene".into()));
    }
    if let Some(p) = pairs.iter().find(|(o, p)| !o.is_finite() || !p.is_finite()) {
        return Err(Error::Invalid(format!("non-finite pair {p:?}")));
    }
    Ok(())
}

/// Mean absolute error over (observed, predicted) pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64> {
    check_pairs(pairs)?;
    let sum: f64 = pairs.iter().map(|(o, p)| (o - p).abs()).sum();
    Ok(sum / pairs.len() as f64)
}

/// Root of the mean squared error. Reported under the MSE name.
pub fn mse(pairs: &[(f64, f64)]) -> Result<f64> {
    check_pairs(pairs)?;
    let sum: f64 = pairs.iter().map(|(o, p)| (o - p) * (o - p)).sum();
    Ok((sum / pairs.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    /// (observed, predicted), ordered by scene id.
    pub pairs: Vec<(f64, f64)>,
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
}

impl EvaluationRecord {
    /// Aggregates estimates in scene-id order.
    pub fn from_estimates(estimates: &[SceneEstimate]) -> Result<Self> {
        let mut sorted: Vec<&SceneEstimate> = estimates.iter().collect();
        sorted.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
        let pairs: Vec<(f64, f64)> = sorted.iter().map(|e| (e.ground_truth, e.total)).collect();
        Ok(Self {
            n: pairs.len(),
            mae: mae(&pairs)?,
            mse: mse(&pairs)?,
            pairs,
        })
    }
}
