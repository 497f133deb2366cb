//! Domain types shared by every pipeline stage.
//!
//! All coordinates are image pixels with `y` increasing downward. The far-view
//! region is the upper part of the frame, above the split polyline.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::polyline::Polyline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridShape {
    pub width: usize,
    pub height: usize,
}

impl GridShape {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid(format!(
                "grid shape must be positive, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64
    }

    pub(crate) fn expect_same(&self, other: GridShape) -> Result<()> {
        if *self != other {
            return Err(Error::ShapeMismatch {
                expected: *self,
                found: other,
            });
        }
        Ok(())
    }
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// Relative depth per pixel: 0 is nearest, 1 is farthest.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    shape: GridShape,
    values: Vec<f64>,
    /// Meters per unit of relative depth, when known.
    pub metric_scale: Option<f64>,
}

impl DepthMap {
    pub fn new(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::Invalid(format!(
                "depth map {shape} needs {} values, got {}",
                shape.len(),
                values.len()
            )));
        }
        if let Some(i) = values
            .iter()
            .position(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
        {
            return Err(Error::Invalid(format!(
                "depth value {} at pixel ({}, {}) is outside [0, 1]",
                values[i],
                i % shape.width,
                i / shape.width
            )));
        }
        Ok(Self {
            shape,
            values,
            metric_scale: None,
        })
    }

    /// Builds a map by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(shape: GridShape, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(shape.len());
        for y in 0..shape.height {
            for x in 0..shape.width {
                values.push(f(x, y));
            }
        }
        Self::new(shape, values)
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.shape.index(x, y)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadPoint {
    pub x: f64,
    pub y: f64,
}

impl HeadPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &HeadPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub score: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64, score: f64) -> Result<Self> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
            score,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.y_min, self.x_max, self.y_max, self.score]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::Invalid(format!("degenerate bounding box {self:?}")));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::Invalid(format!(
                "box score {} outside [0, 1]",
                self.score
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Near,
    Far,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    shape: GridShape,
    labels: Vec<Region>,
}

impl RegionMask {
    pub fn new(shape: GridShape, labels: Vec<Region>) -> Result<Self> {
        if labels.len() != shape.len() {
            return Err(Error::Invalid(format!(
                "mask {shape} needs {} labels, got {}",
                shape.len(),
                labels.len()
            )));
        }
        Ok(Self { shape, labels })
    }

    pub fn filled(shape: GridShape, region: Region) -> Self {
        Self {
            shape,
            labels: vec![region; shape.len()],
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Region {
        self.labels[self.shape.index(x, y)]
    }

    /// Label of the pixel containing the real-valued point, if inside the grid.
    pub fn label_at(&self, x: f64, y: f64) -> Option<Region> {
        self.shape
            .contains(x, y)
            .then(|| self.get(x as usize, y as usize))
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&l| l == region).count()
    }
}

/// Threshold separating near from far cluster mean depths.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DepthThreshold {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for DepthThreshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DepthThreshold::Auto => s.serialize_str("auto"),
            DepthThreshold::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for DepthThreshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Value(f64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Value(v) if (0.0..=1.0).contains(&v) => Ok(DepthThreshold::Fixed(v)),
            Repr::Value(v) => Err(serde::de::Error::custom(format!(
                "depth_threshold {v} outside [0, 1]"
            ))),
            Repr::Word(w) if w.eq_ignore_ascii_case("auto") => Ok(DepthThreshold::Auto),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "depth_threshold must be a number or \"auto\", got {w:?}"
            ))),
        }
    }
}

/// Tuning for the automatic depth partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionParams {
    pub target_cluster_count: usize,
    pub compactness: f64,
    pub max_iters: usize,
    pub simplify_tol: f64,
}

impl Default for PartitionParams {
    fn default() -> Self {
        Self {
            target_cluster_count: 256,
            compactness: 0.1,
            max_iters: 10,
            simplify_tol: 2.0,
        }
    }
}

fn default_knn_k() -> usize {
    3
}
fn default_beta() -> f64 {
    0.3
}
fn default_truncation() -> f64 {
    3.0
}
fn default_sigma_floor() -> f64 {
    1.0
}

/// Per-scene configuration, usually loaded from the scene's JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub scene_id: String,
    /// Manual split line; when absent the partition is derived from depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polyline: Option<Polyline>,
    #[serde(default)]
    pub depth_threshold: DepthThreshold,
    #[serde(default = "default_knn_k")]
    pub knn_k: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Kernel support radius in multiples of sigma.
    #[serde(default = "default_truncation", alias = "truncation_radius")]
    pub kernel_truncation_radius: f64,
    #[serde(default = "default_sigma_floor")]
    pub sigma_floor: f64,
    #[serde(default)]
    pub partition: PartitionParams,
}

impl SceneConfig {
    pub fn new(scene_id: impl Into<String>) -> Self {
        Self {
            scene_id: scene_id.into(),
            polyline: None,
            depth_threshold: DepthThreshold::Auto,
            knn_k: default_knn_k(),
            beta: default_beta(),
            kernel_truncation_radius: default_truncation(),
            sigma_floor: default_sigma_floor(),
            partition: PartitionParams::default(),
        }
    }

    pub fn with_polyline(mut self, polyline: Polyline) -> Self {
        self.polyline = Some(polyline);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("scene {}: {msg}", self.scene_id)));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail(format!("beta must be > 0, got {}", self.beta));
        }
        if self.knn_k < 1 {
            return fail("knn_k must be at least 1".into());
        }
        if !(self.kernel_truncation_radius >= 1.0) {
            return fail(format!(
                "truncation radius must be >= 1 sigma, got {}",
                self.kernel_truncation_radius
            ));
        }
        if !(self.sigma_floor > 0.0) {
            return fail(format!("sigma_floor must be > 0, got {}", self.sigma_floor));
        }
        let p = &self.partition;
        if p.target_cluster_count < 2 || !(p.compactness > 0.0) || !(p.simplify_tol >= 0.0) {
            return fail(format!("invalid partition parameters {p:?}"));
        }
        Ok(())
    }
}

/// One scene's inputs plus ground truth: the unit of evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRecord {
    pub config: SceneConfig,
    pub depth: DepthMap,
    pub heads: Vec<HeadPoint>,
    pub ground_truth_count: f64,
}

impl SceneRecord {
    pub fn new(config: SceneConfig, depth: DepthMap, heads: Vec<HeadPoint>) -> Result<Self> {
        let shape = depth.shape();
        if let Some(h) = heads.iter().find(|h| !shape.contains(h.x, h.y)) {
            return Err(Error::Invalid(format!(
                "head ({}, {}) lies outside the {shape} grid",
                h.x, h.y
            )));
        }
        Ok(Self {
            ground_truth_count: heads.len() as f64,
            config,
            depth,
            heads,
        })
    }

    pub fn shape(&self) -> GridShape {
        self.depth.shape()
    }
}
