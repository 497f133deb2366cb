//! File formats consumed and produced by the pipeline.

mod binary;
mod raster;

pub use binary::{
    decode_density, decode_depth, decode_tensor, encode_density, encode_depth, encode_tensor,
    DENSITY_MAGIC, DEPTH_MAGIC, TENSOR_MAGIC,
};
pub use raster::{
    decode_depth_pgm, encode_depth_pgm16, write_cluster_pgm, write_heatmap, write_mask_pgm,
};

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::density::DensityField;
use crate::detect::{DetectionSet, DetectionSource, GridPrediction};
use crate::error::{Error, Result};
use crate::scene::{BoundingBox, DepthMap, HeadPoint, SceneConfig};

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        e => e,
    })
}

/// Reads a depth map, either the `DIGD` binary format or a PGM.
pub fn read_depth(path: &Path) -> Result<DepthMap> {
    let bytes = read_bytes(path)?;
    let decoded = if bytes.starts_with(DEPTH_MAGIC) {
        decode_depth(&bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        decode_depth_pgm(&bytes)
    } else {
        Err(Error::Format("not a DIGD depth map or PGM image".into()))
    };
    with_path(path, decoded)
}

/// Writes `DIGD`, or a 16-bit PGM when the extension is `.pgm`.
pub fn write_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let bytes = if is_pgm {
        encode_depth_pgm16(depth)?
    } else {
        encode_depth(depth)?
    };
    write_bytes(path, &bytes)
}

pub fn read_density(path: &Path) -> Result<DensityField> {
    with_path(path, decode_density(&read_bytes(path)?))
}

pub fn write_density(path: &Path, field: &DensityField) -> Result<()> {
    write_bytes(path, &encode_density(field)?)
}

pub fn read_tensor(path: &Path) -> Result<GridPrediction> {
    with_path(path, decode_tensor(&read_bytes(path)?))
}

pub fn write_tensor(path: &Path, pred: &GridPrediction) -> Result<()> {
    write_bytes(path, &encode_tensor(pred)?)
}

/// Parses the plain-text detection list: one `x_min y_min x_max y_max score`
/// per line. Blank lines and `#` comments are skipped.
pub fn parse_detections(text: &str, source: DetectionSource) -> Result<DetectionSet> {
    let mut boxes = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("detection line {}: {e}", lineno + 1)))?;
        let [x0, y0, x1, y1, s] = fields[..] else {
            return Err(Error::Format(format!(
                "detection line {}: expected 5 fields, found {}",
                lineno + 1,
                fields.len()
            )));
        };
        let b = BoundingBox::new(x0, y0, x1, y1, s)
            .map_err(|e| Error::Format(format!("detection line {}: {e}", lineno + 1)))?;
        boxes.push(b);
    }
    Ok(DetectionSet::new(boxes, source))
}

pub fn format_detections(dets: &DetectionSet) -> String {
    let mut out = String::from("# x_min y_min x_max y_max score\n");
    for b in &dets.boxes {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            b.x_min, b.y_min, b.x_max, b.y_max, b.score
        ));
    }
    out
}

pub fn read_detections(path: &Path, source: DetectionSource) -> Result<DetectionSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    with_path(path, parse_detections(&text, source))
}

pub fn write_detections(path: &Path, dets: &DetectionSet) -> Result<()> {
    write_bytes(path, format_detections(dets).as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_config(path: &Path) -> Result<SceneConfig> {
    let cfg: SceneConfig = read_json(path)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Head annotations for one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub heads: Vec<HeadPoint>,
    /// Defaults to the number of heads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<f64>,
}

impl Annotations {
    pub fn new(heads: Vec<HeadPoint>) -> Self {
        let count = Some(heads.len() as f64);
        Self { heads, count }
    }

    pub fn ground_truth(&self) -> f64 {
        self.count.unwrap_or(self.heads.len() as f64)
    }
}

pub fn read_annotations(path: &Path) -> Result<Annotations> {
    let a: Annotations = read_json(path)?;
    if let Some(c) = a.count {
        if !(c >= 0.0) {
            return Err(Error::Format(format!("{}: negative count {c}", path.display())));
        }
        if !a.heads.is_empty() && c != a.heads.len() as f64 {
            return Err(Error::Format(format!(
                "{}: count {c} disagrees with {} annotated heads",
                path.display(),
                a.heads.len()
            )));
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_text_roundtrip() {
        let dets = DetectionSet::new(
            vec![
                BoundingBox::new(1.0, 2.0, 3.5, 4.25, 0.9).unwrap(),
                BoundingBox::new(10.0 / 3.0, 0.1, 7.0, 9.0, 1.0).unwrap(),
            ],
            DetectionSource::Oracle,
        );
        let back = parse_detections(&format_detections(&dets), DetectionSource::Oracle).unwrap();
        assert_eq!(back, dets);
    }

    #[test]
    fn detection_text_errors() {
        assert!(parse_detections("1 2 3", DetectionSource::External).is_err());
        assert!(parse_detections("1 2 3 4 x", DetectionSource::External).is_err());
        assert!(parse_detections("5 2 3 4 0.5", DetectionSource::External).is_err());
        let ok = parse_detections("\n# header\n0 0 1 1 0.5 # inline\n", DetectionSource::External).unwrap();
        assert_eq!(ok.len(), 1);
    }

    #[test]
    fn files_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let shape = crate::scene::GridShape::new(4, 3).unwrap();
        let depth = DepthMap::from_fn(shape, |x, y| (x + y) as f64 / 10.0).unwrap();
        let depth = DepthMap::new(shape, depth.values().iter().map(|&v| v as f32 as f64).collect()).unwrap();
        let p = dir.path().join("nested/depth.digd");
        write_depth(&p, &depth).unwrap();
        assert_eq!(read_depth(&p).unwrap(), depth);

        let a = Annotations::new(vec![HeadPoint::new(1.5, 2.0)]);
        let p = dir.path().join("ann.json");
        write_json(&p, &a).unwrap();
        assert_eq!(read_annotations(&p).unwrap(), a);

        let bad = dir.path().join("bad.json");
        fs::write(&bad, r#"{"heads": [{"x": 1, "y": 1}], "count": 4}"#).unwrap();
        assert!(read_annotations(&bad).is_err());

        let missing = dir.path().join("nope.digf");
        assert!(matches!(read_density(&missing), Err(Error::Io { .. })));
    }
}
