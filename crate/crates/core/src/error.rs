use std::path::PathBuf;

use crate::scene::GridShape;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("x = {x} lies outside the polyline domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("polyline does not cover [{lo}, {hi})")]
    UncoveredDomain { lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: GridShape, found: GridShape },

    #[error("no depth contrast: every cluster has the same mean depth; supply a manual polyline")]
    NoDepthContrast,

    #[error("partition needs at least one near and one far cluster")]
    MissingRegion,

    #[error("{n_people} people cannot be packed at {min_spacing} px minimum spacing (capacity {capacity})")]
    Capacity {
        n_people: usize,
        min_spacing: f64,
        capacity: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("scene {scene_id}: {source}")]
    Scene {
        scene_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_scene(self, scene_id: &str) -> Self {
        match self {
            e @ Error::Scene { .. } => e,
            e => Error::Scene {
                scene_id: scene_id.to_string(),
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
