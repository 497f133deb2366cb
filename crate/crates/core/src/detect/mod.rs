//! Grid-detector output decoding for the near-view region.
//!
//! Prediction tensors come from an external network (or the synthetic
//! oracle). Each of the `S x S` cells carries `B` boxes `(x, y, w, h, c)`
//! followed by `C` class probabilities.

mod decode;
mod nms;

pub use decode::{combine_confidence, decode, encode_center, Decoded};
pub use nms::{iou, nms};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{BoundingBox, GridShape};

pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.2;
pub const DEFAULT_NMS_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorGridSpec {
    /// Cells per side.
    pub s: usize,
    /// Boxes per cell.
    pub b: usize,
    /// Class count.
    pub c: usize,
}

impl Default for DetectorGridSpec {
    fn default() -> Self {
        Self { s: 7, b: 2, c: 1 }
    }
}

impl DetectorGridSpec {
    pub fn new(s: usize, b: usize, c: usize) -> Result<Self> {
        if s == 0 || b == 0 || c == 0 {
            return Err(Error::Format(format!(
                "detector grid needs positive S, B, C (got {s}, {b}, {c})"
            )));
        }
        Ok(Self { s, b, c })
    }

    pub fn cell_len(&self) -> usize {
        self.b * 5 + self.c
    }

    pub fn tensor_len(&self) -> usize {
        self.s * self.s * self.cell_len()
    }

    /// Offset of box `k`'s `(x, y, w, h, c)` tuple in cell `(row, col)`.
    pub fn box_offset(&self, row: usize, col: usize, k: usize) -> usize {
        (row * self.s + col) * self.cell_len() + k * 5
    }

    pub fn class_offset(&self, row: usize, col: usize) -> usize {
        (row * self.s + col) * self.cell_len() + self.b * 5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPrediction {
    pub spec: DetectorGridSpec,
    /// Image extent the box coordinates are relative to.
    pub shape: GridShape,
    pub values: Vec<f32>,
}

impl GridPrediction {
    pub fn new(spec: DetectorGridSpec, shape: GridShape, values: Vec<f32>) -> Result<Self> {
        if values.len() != spec.tensor_len() {
            return Err(Error::Format(format!(
                "prediction tensor has {} values, S={} B={} C={} needs {}",
                values.len(),
                spec.s,
                spec.b,
                spec.c,
                spec.tensor_len()
            )));
        }
        Ok(Self { spec, shape, values })
    }

    pub fn zeros(spec: DetectorGridSpec, shape: GridShape) -> Self {
        Self {
            spec,
            shape,
            values: vec![0.0; spec.tensor_len()],
        }
    }

    /// Writes box `k` of cell `(row, col)`.
    pub fn set_box(&mut self, row: usize, col: usize, k: usize, xywhc: [f32; 5]) {
        let o = self.spec.box_offset(row, col, k);
        self.values[o..o + 5].copy_from_slice(&xywhc);
    }

    pub fn set_class_probs(&mut self, row: usize, col: usize, probs: &[f32]) {
        let o = self.spec.class_offset(row, col);
        self.values[o..o + self.spec.c].copy_from_slice(probs);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionSource {
    External,
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    pub boxes: Vec<BoundingBox>,
    pub source: DetectionSource,
}

impl DetectionSet {
    pub fn new(boxes: Vec<BoundingBox>, source: DetectionSource) -> Self {
        Self { boxes, source }
    }

    pub fn empty(source: DetectionSource) -> Self {
        Self::new(Vec::new(), source)
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}
