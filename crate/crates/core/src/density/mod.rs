//! Geometry-adaptive density maps and their integration.
//!
//! Each head gets a Gaussian whose sigma is `beta` times the mean distance to
//! its nearest neighbors. Integrating the field over a region yields the
//! count of people there.

mod knn;
mod raster;

pub use knn::{knn_mean_distance, NeighborStats};
pub use raster::{rasterize_density, rasterize_density_with, RasterOptions, Rasterized, Reduction};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::scene::{GridShape, HeadPoint, Region, RegionMask};

pub const DEFAULT_TRUNCATION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelParams {
    pub sigma: f64,
    pub beta: f64,
    /// Support radius in multiples of sigma.
    pub truncation_radius: f64,
}

impl KernelParams {
    pub fn with_truncation(mut self, radius: f64) -> Self {
        self.truncation_radius = radius;
        self
    }
}

/// `sigma = beta * mean`, falling back to `sigma_floor` when the mean is
/// undefined or the product is below the floor.
pub fn adaptive_sigma(stats: &NeighborStats, beta: f64, sigma_floor: f64) -> KernelParams {
    let sigma = match stats.mean {
        Some(d) if beta * d >= sigma_floor => beta * d,
        _ => sigma_floor,
    };
    KernelParams {
        sigma,
        beta,
        truncation_radius: DEFAULT_TRUNCATION,
    }
}

/// Kernel parameters for every head from its neighbor geometry.
pub fn kernel_params(
    heads: &[HeadPoint],
    k: usize,
    beta: f64,
    sigma_floor: f64,
    truncation_radius: f64,
) -> Result<Vec<KernelParams>> {
    if heads.is_empty() {
        return Ok(Vec::new());
    }
    Ok(knn_mean_distance(heads, k)?
        .iter()
        .map(|s| adaptive_sigma(s, beta, sigma_floor).with_truncation(truncation_radius))
        .collect())
}

/// Persons per pixel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    shape: GridShape,
    values: Vec<f64>,
    total_mass: f64,
}

impl DensityField {
    pub fn new(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::Invalid(format!(
                "density field {shape} needs {} values, got {}",
                shape.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Invalid(format!("density value {v} is negative or not finite")));
        }
        let total_mass = values.iter().sum();
        Ok(Self {
            shape,
            values,
            total_mass,
        })
    }

    pub fn zeros(shape: GridShape) -> Self {
        Self {
            shape,
            values: vec![0.0; shape.len()],
            total_mass: 0.0,
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.shape.index(x, y)]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// True when every value survives the round trip through `f32`.
    pub fn is_f32_exact(&self) -> bool {
        self.values.iter().all(|&v| (v as f32) as f64 == v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionSelector {
    Near,
    Far,
    All,
}

impl From<Region> for RegionSelector {
    fn from(r: Region) -> Self {
        match r {
            Region::Near => RegionSelector::Near,
            Region::Far => RegionSelector::Far,
        }
    }
}

/// Sum of the field over pixels whose label matches `region`.
pub fn integrate(field: &DensityField, mask: &RegionMask, region: RegionSelector) -> Result<f64> {
    mask.shape().expect_same(field.shape())?;
    let want = match region {
        RegionSelector::All => return Ok(field.values.iter().sum()),
        RegionSelector::Near => Region::Near,
        RegionSelector::Far => Region::Far,
    };
    Ok(field
        .values
        .iter()
        .zip(mask.labels())
        .filter(|(_, &l)| l == want)
        .map(|(v, _)| v)
        .sum())
}

/// Loads a predicted density field and integrates it over the Far region.
pub fn far_count_from_external(path: &Path, mask: &RegionMask) -> Result<f64> {
    let field = io::read_density(path)?;
    if field.shape() != mask.shape() {
        return Err(Error::Format(format!(
            "{}: density field is {} but the scene mask is {}",
            path.display(),
            field.shape(),
            mask.shape()
        )));
    }
    integrate(&field, mask, RegionSelector::Far)
}
