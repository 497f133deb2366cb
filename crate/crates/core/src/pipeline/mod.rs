//! Manifest-driven batch runs.

mod bench;
mod manifest;
mod report;

pub use bench::{bench_generate, BenchOutcome, BenchSpec, DetectorFormat};
pub use manifest::{Manifest, SceneEntry};
pub use report::{write_reports, RunReport, Summary};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::density::far_count_from_external;
use crate::detect::{self, DetectionSet, DetectionSource, DEFAULT_NMS_IOU, DEFAULT_SCORE_THRESHOLD};
use crate::error::{Error, Result};
use crate::eval::{fuse, EvaluationRecord, SceneEstimate};
use crate::io;
use crate::partition::{partition, PartitionDiagnostics, PartitionResult};
use crate::scene::{DepthMap, SceneConfig};
use crate::spatial::{apply_spatial_constraint, FilterSummary};

pub const FAR_ABSENT: &str = "far predictions absent";
pub const NEAR_ABSENT: &str = "near predictions absent";

/// Command-line overrides and run settings. Overrides win over the values
/// in each scene's config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOptions {
    pub beta: Option<f64>,
    pub knn_k: Option<usize>,
    pub score_threshold: f64,
    pub nms_iou: f64,
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
    pub deterministic: bool,
    /// Directory for per-scene mask, cluster and heat-map rasters.
    pub render_debug: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            beta: None,
            knn_k: None,
            score_threshold: DEFAULT_SCORE_THRESHOLD,
            nms_iou: DEFAULT_NMS_IOU,
            workers: None,
            deterministic: false,
            render_debug: None,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score_threshold) || !(0.0..=1.0).contains(&self.nms_iou) {
            return Err(Error::Config(format!(
                "score threshold and NMS IoU must lie in [0, 1], got {} and {}",
                self.score_threshold, self.nms_iou
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("worker count must be positive".into()));
        }
        Ok(())
    }

    fn apply(&self, cfg: &mut SceneConfig) {
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        if let Some(k) = self.knn_k {
            cfg.knn_k = k;
        }
    }
}

/// Result of one scene. `error` is set iff the scene failed; partial
/// counts survive a failure where possible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneOutcome {
    pub scene_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<SceneEstimate>,
    pub near_count: Option<usize>,
    pub far_count: Option<f64>,
    pub ground_truth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionDiagnostics>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SceneOutcome {
    fn new(scene_id: &str) -> Self {
        Self {
            scene_id: scene_id.to_string(),
            estimate: None,
            near_count: None,
            far_count: None,
            ground_truth: None,
            filter: None,
            partition: None,
            warnings: Vec::new(),
            error: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    fn fail(mut self, reason: impl Into<String>) -> Self {
        self.error = Some(reason.into());
        self
    }
}

/// Loaded scene inputs shared by the subcommands.
pub struct SceneInputs {
    pub config: SceneConfig,
    pub depth: DepthMap,
    pub ground_truth: f64,
}

pub fn load_scene(entry: &SceneEntry, opts: &RunOptions) -> Result<SceneInputs> {
    let mut config = match &entry.config {
        Some(p) => io::read_config(p)?,
        None => SceneConfig::new(&entry.scene_id),
    };
    if config.scene_id != entry.scene_id {
        log::debug!(
            "config scene_id {:?} replaced by manifest id {:?}",
            config.scene_id,
            entry.scene_id
        );
        config.scene_id = entry.scene_id.clone();
    }
    opts.apply(&mut config);
    config.validate()?;
    let depth = io::read_depth(&entry.depth)?;
    let ann = io::read_annotations(&entry.annotations)?;
    let shape = depth.shape();
    if let Some(h) = ann.heads.iter().find(|h| !shape.contains(h.x, h.y)) {
        return Err(Error::Invalid(format!(
            "annotated head ({}, {}) lies outside the {shape} depth grid",
            h.x, h.y
        )));
    }
    Ok(SceneInputs {
        config,
        depth,
        ground_truth: ann.ground_truth(),
    })
}

/// Near-view detections from whichever prediction file the entry names.
/// Tensors are decoded, thresholded and suppressed; text lists are taken
/// as final detections.
fn near_detections(
    entry: &SceneEntry,
    inputs: &SceneInputs,
    opts: &RunOptions,
    warnings: &mut Vec<String>,
) -> Result<Option<DetectionSet>> {
    if let Some(path) = &entry.tensor {
        let pred = io::read_tensor(path)?;
        inputs.depth.shape().expect_same(pred.shape)?;
        let decoded = detect::decode(&pred, opts.score_threshold);
        warnings.extend(decoded.warnings());
        return Ok(Some(detect::nms(&decoded.detections, opts.nms_iou)));
    }
    if let Some(path) = &entry.detections {
        let dets = io::read_detections(path, DetectionSource::External)?;
        let shape = inputs.depth.shape();
        let (w, h) = (shape.width as f64, shape.height as f64);
        if let Some(b) = dets
            .boxes
            .iter()
            .find(|b| b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > w || b.y_max > h)
        {
            warnings.push(format!("detection {b:?} extends beyond the {shape} image"));
        }
        return Ok(Some(dets));
    }
    Ok(None)
}

fn render(dir: &Path, scene_id: &str, part: &PartitionResult) -> Result<()> {
    let base = dir.join(scene_id);
    io::write_mask_pgm(&base.join("mask.pgm"), &part.mask)?;
    if let Some(c) = &part.clusters {
        io::write_cluster_pgm(&base.join("clusters.pgm"), c.shape, &c.assignments)?;
    }
    Ok(())
}

/// Partition, near count, spatial filter, far integration and fusion for
/// one scene. Never panics on bad input: errors become the outcome's
/// failure reason.
pub fn run_scene(entry: &SceneEntry, opts: &RunOptions) -> SceneOutcome {
    let mut out = SceneOutcome::new(&entry.scene_id);
    let inputs = match load_scene(entry, opts) {
        Ok(i) => i,
        Err(e) => return out.fail(e.to_string()),
    };
    out.ground_truth = Some(inputs.ground_truth);
    let part = match partition(&inputs.depth, &inputs.config) {
        Ok(p) => p,
        Err(e) => return out.fail(e.to_string()),
    };
    out.warnings.extend(part.warnings.iter().cloned());
    out.partition = Some(part.diagnostics());
    if let Some(dir) = &opts.render_debug {
        if let Err(e) = render(dir, &entry.scene_id, &part) {
            out.warnings.push(format!("debug render failed: {e}"));
        }
    }

    let mut failures = Vec::new();
    let mut kept = None;
    match near_detections(entry, &inputs, opts, &mut out.warnings) {
        Ok(Some(dets)) => {
            let report = apply_spatial_constraint(&dets, &part.polyline, &entry.scene_id);
            if !report.out_of_domain.is_empty() {
                out.warnings.push(format!(
                    "{} boxes centered outside the polyline domain were kept",
                    report.out_of_domain.len()
                ));
            }
            out.filter = Some(report.summary());
            out.near_count = Some(report.kept.len());
            kept = Some(report.kept);
        }
        Ok(None) => failures.push(NEAR_ABSENT.to_string()),
        Err(e) => failures.push(format!("near predictions: {e}")),
    }

    match &entry.density {
        Some(path) if path.exists() => match far_count_from_external(path, &part.mask) {
            Ok(c) => out.far_count = Some(c),
            Err(e) => failures.push(format!("far predictions: {e}")),
        },
        _ => failures.push(FAR_ABSENT.to_string()),
    }
    if let (Some(dir), Some(path)) = (&opts.render_debug, &entry.density) {
        if let Ok(field) = io::read_density(path) {
            if let Err(e) = io::write_heatmap(&dir.join(&entry.scene_id).join("density.png"), &field) {
                out.warnings.push(format!("debug render failed: {e}"));
            }
        }
    }

    if !failures.is_empty() {
        return out.fail(failures.join("; "));
    }
    let (kept, far) = (kept.expect("near stage succeeded"), out.far_count.expect("far stage succeeded"));
    match fuse(&kept, far) {
        Ok((near_count, total)) => {
            out.estimate = Some(SceneEstimate {
                scene_id: entry.scene_id.clone(),
                near_count,
                far_count: far,
                total,
                ground_truth: inputs.ground_truth,
            });
            out
        }
        Err(e) => out.fail(e.to_string()),
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs `f` over the manifest scenes in parallel, keeping manifest order.
pub fn map_scenes<T: Send>(
    manifest: &Manifest,
    workers: Option<usize>,
    f: impl Fn(&SceneEntry) -> T + Sync + Send,
) -> Result<Vec<T>> {
    Ok(pool(workers)?.install(|| manifest.scenes.par_iter().map(&f).collect()))
}

/// Runs every scene and aggregates MAE/MSE over the ones that succeeded.
pub fn run_dataset(manifest: &Manifest, opts: &RunOptions) -> Result<RunReport> {
    opts.validate()?;
    if manifest.scenes.is_empty() {
        return Err(Error::Invalid(format!("manifest {:?} has no scenes", manifest.dataset_id)));
    }
    let scenes = map_scenes(manifest, opts.workers, |e| run_scene(e, opts))?;
    let estimates: Vec<SceneEstimate> = scenes.iter().filter_map(|s| s.estimate.clone()).collect();
    let evaluation = if estimates.is_empty() {
        None
    } else {
        Some(EvaluationRecord::from_estimates(&estimates)?)
    };
    Ok(RunReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset_id: manifest.dataset_id.clone(),
        options: opts.clone(),
        succeeded: estimates.len(),
        failed: scenes.len() - estimates.len(),
        scenes,
        evaluation,
    })
}
