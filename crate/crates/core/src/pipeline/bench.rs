use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Manifest, SceneEntry};
use crate::density::Reduction;
use crate::detect::DetectorGridSpec;
use crate::error::{Error, Result};
use crate::io::{self, Annotations};
use crate::partition::partition_with_polyline;
use crate::synth::{
    detections_to_tensor, generate_scene, ground_truth_polyline, oracle_predictions, NoiseSpec,
    OraclePredictions, SynthSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorFormat {
    /// Text list of final boxes.
    #[default]
    List,
    /// Grid tensor; boxes beyond a cell's capacity are lost.
    Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub dataset_id: String,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub detector_format: DetectorFormat,
    pub scenes: Vec<SynthSpec>,
}

impl BenchSpec {
    /// `count` copies of `base` with seeds `seed, seed + 1, ...` and ids
    /// `scene-0000, ...`.
    pub fn seeded(dataset_id: &str, base: SynthSpec, count: usize, seed: u64) -> Self {
        let scenes = (0..count)
            .map(|i| SynthSpec {
                scene_id: Some(format!("scene-{i:04}")),
                seed: seed.wrapping_add(i as u64),
                ..base.clone()
            })
            .collect();
        Self {
            dataset_id: dataset_id.to_string(),
            noise: NoiseSpec::default(),
            detector_format: DetectorFormat::List,
            scenes,
        }
    }

    /// Replaces every scene seed with `seed + index`.
    pub fn reseed(&mut self, seed: u64) {
        for (i, s) in self.scenes.iter_mut().enumerate() {
            s.seed = seed.wrapping_add(i as u64);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleStats {
    pub near_heads: usize,
    pub far_heads: usize,
    pub missed: usize,
    pub false_positives: usize,
    /// Boxes lost because their tensor cell was full.
    pub tensor_overflow: usize,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    /// Manifest with paths resolved against the output directory.
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    /// Scenes that could not be generated, with the reason.
    pub failures: Vec<(String, String)>,
}

fn write_scene(
    spec: &SynthSpec,
    bench: &BenchSpec,
    dir: &Path,
    reduction: Reduction,
) -> Result<SceneEntry> {
    let id = spec.scene_id();
    let rec = generate_scene(spec)?;
    let truth = partition_with_polyline(&ground_truth_polyline(spec)?, rec.shape())?;
    let oracle: OraclePredictions = oracle_predictions(&rec, &truth, spec, &bench.noise, reduction)?;

    let rel = PathBuf::from(&id);
    let scene_dir = dir.join(&rel);
    io::write_depth(&scene_dir.join("depth.digd"), &rec.depth)?;
    io::write_json(&scene_dir.join("annotations.json"), &Annotations::new(rec.heads.clone()))?;
    io::write_json(&scene_dir.join("config.json"), &rec.config)?;
    io::write_json(&scene_dir.join("spec.json"), spec)?;
    io::write_density(&scene_dir.join("density.digf"), &oracle.density)?;

    let mut entry = SceneEntry {
        scene_id: id,
        depth: rel.join("depth.digd"),
        annotations: rel.join("annotations.json"),
        config: Some(rel.join("config.json")),
        detections: None,
        tensor: None,
        density: Some(rel.join("density.digf")),
    };
    let mut overflow = 0;
    match bench.detector_format {
        DetectorFormat::List => {
            io::write_detections(&scene_dir.join("detections.txt"), &oracle.detections)?;
            entry.detections = Some(rel.join("detections.txt"));
        }
        DetectorFormat::Tensor => {
            let (pred, dropped) =
                detections_to_tensor(&oracle.detections, DetectorGridSpec::default(), rec.shape());
            overflow = dropped;
            io::write_tensor(&scene_dir.join("tensor.digy"), &pred)?;
            entry.tensor = Some(rel.join("tensor.digy"));
        }
    }
    let stats = OracleStats {
        near_heads: oracle.near_heads,
        far_heads: oracle.far_heads,
        missed: oracle.missed,
        false_positives: oracle.false_positives,
        tensor_overflow: overflow,
    };
    io::write_json(&scene_dir.join("oracle.json"), &stats)?;
    Ok(entry)
}

/// Generates every scene of `bench` under `dir` and writes
/// `dir/manifest.json`. Scenes that fail to generate are reported and left
/// out of the manifest. `deterministic` forces ordered density reduction.
pub fn bench_generate(bench: &BenchSpec, dir: &Path, deterministic: bool) -> Result<BenchOutcome> {
    bench.noise.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let reduction = if deterministic {
        Reduction::Ordered
    } else {
        Reduction::Parallel
    };
    let results: Vec<(String, Result<SceneEntry>)> = bench
        .scenes
        .par_iter()
        .map(|s| (s.scene_id(), write_scene(s, bench, dir, reduction)))
        .collect();

    let mut scenes = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(e) => scenes.push(e),
            Err(e) => {
                log::error!("scene {id}: {e}");
                failures.push((id, e.to_string()));
            }
        }
    }
    let manifest = Manifest {
        dataset_id: bench.dataset_id.clone(),
        scenes,
    };
    manifest.check_ids()?;
    let manifest_path = dir.join("manifest.json");
    io::write_json(&manifest_path, &manifest)?;
    Ok(BenchOutcome {
        manifest: Manifest::load(&manifest_path)?,
        manifest_path,
        failures,
    })
}
