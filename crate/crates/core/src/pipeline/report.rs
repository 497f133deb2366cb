use std::path::Path;

use serde::Serialize;

use super::{RunOptions, SceneOutcome};
use crate::error::{Error, Result};
use crate::eval::{EvaluationRecord, SceneEstimate, MSE_LABEL};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool_version: String,
    pub dataset_id: String,
    pub options: RunOptions,
    pub succeeded: usize,
    pub failed: usize,
    /// Manifest order; every scene appears exactly once.
    pub scenes: Vec<SceneOutcome>,
    pub evaluation: Option<EvaluationRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailedScene {
    pub scene_id: String,
    pub reason: String,
}

/// Dataset metrics plus the per-scene estimates they came from.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    #[serde(rename = "N")]
    pub n: usize,
    pub mae: Option<f64>,
    pub mse: Option<f64>,
    pub mse_definition: &'static str,
    pub scenes: Vec<SceneEstimate>,
    pub failed: Vec<FailedScene>,
}

impl RunReport {
    pub fn all_succeeded(&self) -> bool {
        self.failed == 0
    }

    pub fn summary(&self) -> Summary {
        let mut scenes: Vec<SceneEstimate> =
            self.scenes.iter().filter_map(|s| s.estimate.clone()).collect();
        scenes.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
        Summary {
            n: scenes.len(),
            mae: self.evaluation.as_ref().map(|e| e.mae),
            mse: self.evaluation.as_ref().map(|e| e.mse),
            mse_definition: MSE_LABEL,
            scenes,
            failed: self
                .scenes
                .iter()
                .filter_map(|s| {
                    s.error.as_ref().map(|r| FailedScene {
                        scene_id: s.scene_id.clone(),
                        reason: r.clone(),
                    })
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scene_id: &'a str,
    near_count: usize,
    far_count: f64,
    total: f64,
    ground_truth: f64,
    abs_error: f64,
}

fn csv_bytes(estimates: &[SceneEstimate]) -> Result<Vec<u8>> {
    let csv_err = |e: csv::Error| Error::Format(format!("csv report: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in estimates {
        w.serialize(CsvRow {
            scene_id: &e.scene_id,
            near_count: e.near_count,
            far_count: e.far_count,
            total: e.total,
            ground_truth: e.ground_truth,
            abs_error: e.abs_error(),
        })
        .map_err(csv_err)?;
    }
    if estimates.is_empty() {
        w.write_record(["scene_id", "near_count", "far_count", "total", "ground_truth", "abs_error"])
            .map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Format(format!("csv report: {e}")))
}

/// Writes `report.csv`, `summary.json` and `run_report.json` into `dir`.
pub fn write_reports(report: &RunReport, dir: &Path) -> Result<()> {
    let summary = report.summary();
    io::write_bytes(&dir.join("report.csv"), &csv_bytes(&summary.scenes)?)?;
    io::write_json(&dir.join("summary.json"), &summary)?;
    io::write_json(&dir.join("run_report.json"), report)
}
