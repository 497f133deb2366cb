//! Near/far scene partition driven by depth.
//!
//! A manual polyline in the scene configuration always wins. Otherwise the
//! depth map is clustered, clusters are split by mean depth, and the split
//! line is extracted from the far clusters.

pub mod classify;
pub mod cluster;
pub mod extract;

pub use classify::{classify_clusters, otsu_threshold, Classification};
pub use cluster::{cluster_depth, ClusterFeature, ClusterState};
pub use extract::{extract_polyline, Extraction};

use serde::Serialize;

use crate::error::Result;
use crate::polyline::{mask_from_polyline, Polyline};
use crate::scene::{DepthMap, GridShape, RegionMask, SceneConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    pub mask: RegionMask,
    pub polyline: Polyline,
    pub cluster_mean_depths: Vec<f64>,
    /// `None` when the polyline came from the configuration.
    pub threshold_used: Option<f64>,
    pub manual: bool,
    pub warnings: Vec<String>,
    /// Clustering output, kept for debug rasters.
    pub clusters: Option<ClusterState>,
}

/// Serializable summary for run reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionDiagnostics {
    pub manual: bool,
    pub polyline: Polyline,
    pub cluster_count: usize,
    pub cluster_mean_depths: Vec<f64>,
    pub threshold_used: Option<f64>,
    pub iterations: usize,
    pub final_energy: Option<f64>,
}

impl PartitionResult {
    pub fn diagnostics(&self) -> PartitionDiagnostics {
        PartitionDiagnostics {
            manual: self.manual,
            polyline: self.polyline.clone(),
            cluster_count: self.cluster_mean_depths.len(),
            cluster_mean_depths: self.cluster_mean_depths.clone(),
            threshold_used: self.threshold_used,
            iterations: self
                .clusters
                .as_ref()
                .map_or(0, |c| c.energies.len().saturating_sub(1)),
            final_energy: self.clusters.as_ref().and_then(|c| c.energies.last().copied()),
        }
    }
}

/// Partition using a known polyline; no depth needed.
pub fn partition_with_polyline(polyline: &Polyline, shape: GridShape) -> Result<PartitionResult> {
    Ok(PartitionResult {
        mask: mask_from_polyline(polyline, shape)?,
        polyline: polyline.clone(),
        cluster_mean_depths: Vec::new(),
        threshold_used: None,
        manual: true,
        warnings: Vec::new(),
        clusters: None,
    })
}

pub fn partition(depth: &DepthMap, cfg: &SceneConfig) -> Result<PartitionResult> {
    if let Some(p) = &cfg.polyline {
        return partition_with_polyline(p, depth.shape());
    }
    automatic(depth, cfg).map_err(|e| e.in_scene(&cfg.scene_id))
}

fn automatic(depth: &DepthMap, cfg: &SceneConfig) -> Result<PartitionResult> {
    let params = &cfg.partition;
    let shape = depth.shape();
    let clusters = cluster_depth(
        depth,
        params.target_cluster_count.min(shape.len()),
        params.compactness,
        params.max_iters,
    )?;
    let class = classify_clusters(&clusters, depth, cfg.depth_threshold)?;
    let ex = extract_polyline(&class.labels, &clusters, shape, params.simplify_tol)?;
    let mask = mask_from_polyline(&ex.polyline, shape)?;
    if let Some(w) = &ex.warning {
        log::warn!("scene {}: {w}", cfg.scene_id);
    }
    Ok(PartitionResult {
        mask,
        polyline: ex.polyline,
        cluster_mean_depths: class.mean_depths,
        threshold_used: Some(class.threshold),
        manual: false,
        warnings: ex.warning.into_iter().collect(),
        clusters: Some(clusters),
    })
}
