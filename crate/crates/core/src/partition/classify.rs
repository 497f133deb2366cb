use crate::error::{Error, Result};
use crate::partition::cluster::ClusterState;
use crate::scene::{DepthMap, DepthThreshold, Region};

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub labels: Vec<Region>,
    pub mean_depths: Vec<f64>,
    pub threshold: f64,
}

pub fn cluster_mean_depths(state: &ClusterState, depth: &DepthMap) -> Result<Vec<f64>> {
    depth.shape().expect_same(state.shape)?;
    let mut sums = vec![(0.0, 0usize); state.cluster_count()];
    for (&a, &d) in state.assignments.iter().zip(depth.values()) {
        sums[a].0 += d;
        sums[a].1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(s, n)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect())
}

/// Two-class threshold maximizing between-class variance, with every
/// cluster mean weighted equally. Candidates are midpoints between
/// consecutive distinct sorted means; ties keep the smallest threshold.
pub fn otsu_threshold(means: &[f64]) -> Result<f64> {
    let mut sorted = means.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    let mut prefix = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..sorted.len().saturating_sub(1) {
        prefix += sorted[i];
        if sorted[i] == sorted[i + 1] {
            continue;
        }
        let n0 = (i + 1) as f64;
        let n1 = n - n0;
        let mu0 = prefix / n0;
        let mu1 = (total - prefix) / n1;
        let var = (n0 / n) * (n1 / n) * (mu0 - mu1).powi(2);
        if best.is_none_or(|(v, _)| var > v) {
            best = Some((var, 0.5 * (sorted[i] + sorted[i + 1])));
        }
    }
    best.map(|(_, t)| t).ok_or(Error::NoDepthContrast)
}

/// Labels each cluster Far iff its mean depth is at least the threshold.
pub fn classify_clusters(
    state: &ClusterState,
    depth: &DepthMap,
    threshold: DepthThreshold,
) -> Result<Classification> {
    let mean_depths = cluster_mean_depths(state, depth)?;
    let threshold = match threshold {
        DepthThreshold::Fixed(t) => t,
        DepthThreshold::Auto => otsu_threshold(&mean_depths)?,
    };
    let labels = mean_depths
        .iter()
        .map(|&m| if m >= threshold { Region::Far } else { Region::Near })
        .collect();
    Ok(Classification {
        labels,
        mean_depths,
        threshold,
    })
}
