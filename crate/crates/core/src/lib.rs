//! Depth-guided crowd counting.
//!
//! A scene is split by a polyline into a near-view region (counted from
//! detector boxes) and a far-view region (counted by integrating a density
//! map). The two counts are fused per scene and scored with MAE/MSE over a
//! dataset. Trained networks are out of the loop: the pipeline consumes
//! prediction files, and [`synth`] generates scenes plus oracle predictions
//! for end-to-end checks.

pub mod density;
pub mod detect;
pub mod error;
pub mod eval;
pub mod io;
pub mod partition;
pub mod pipeline;
pub mod polyline;
pub mod scene;
pub mod spatial;
pub mod synth;

pub use error::{Error, Result};
pub use polyline::{mask_from_polyline, Polyline, Segment};
pub use scene::{
    BoundingBox, DepthMap, DepthThreshold, GridShape, HeadPoint, PartitionParams, Region,
    RegionMask, SceneConfig, SceneRecord,
};
