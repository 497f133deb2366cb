//! Geometry-adaptive Gaussian rasterization.
//!
//! Each head contributes a discrete Gaussian sampled at pixel centers,
//! truncated to a disc of `truncation_radius * sigma`, and renormalized to
//! unit mass so border heads still count as one person.

use rayon::prelude::*;

use crate::density::{DensityField, KernelParams};
use crate::error::{Error, Result};
use crate::scene::{GridShape, HeadPoint, Region, RegionMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Kernels added in head order; bit-exact across runs and thread counts.
    #[default]
    Ordered,
    /// Per-thread partial fields merged by rayon; order-dependent rounding.
    Parallel,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RasterOptions<'a> {
    /// Restrict every kernel's support to pixels carrying this label and
    /// renormalize over that support.
    pub support: Option<(&'a RegionMask, Region)>,
    /// Round each kernel weight down to a multiple of `2^-bits`, putting the
    /// remainder on the peak so the kernel still sums to exactly one. Sums
    /// of such fields are exact in `f64`.
    pub quantum_bits: Option<u32>,
    pub reduction: Reduction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rasterized {
    pub field: DensityField,
    /// Kernels whose restricted support was empty; their mass sits on the
    /// head's own pixel regardless of its label.
    pub unsupported: usize,
}

struct Kernel {
    cells: Vec<(usize, f64)>,
    supported: bool,
}

fn kernel(head: &HeadPoint, params: &KernelParams, shape: GridShape, opts: &RasterOptions) -> Kernel {
    let sigma = params.sigma;
    let r = params.truncation_radius * sigma;
    let (w, h) = (shape.width as isize, shape.height as isize);
    let x_lo = ((head.x - 0.5 - r).ceil() as isize).max(0);
    let x_hi = ((head.x - 0.5 + r).floor() as isize).min(w - 1);
    let y_lo = ((head.y - 0.5 - r).ceil() as isize).max(0);
    let y_hi = ((head.y - 0.5 + r).floor() as isize).min(h - 1);
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let r2 = r * r;

    let mut cells = Vec::new();
    let mut total = 0.0;
    for py in y_lo..=y_hi {
        let dy = py as f64 + 0.5 - head.y;
        for px in x_lo..=x_hi {
            let dx = px as f64 + 0.5 - head.x;
            let d2 = dx * dx + dy * dy;
            if d2 > r2 {
                continue;
            }
            let idx = shape.index(px as usize, py as usize);
            if let Some((mask, region)) = opts.support {
                if mask.labels()[idx] != region {
                    continue;
                }
            }
            let v = (-d2 * inv_two_var).exp();
            total += v;
            cells.push((idx, v));
        }
    }
    let supported = total > 0.0;
    if !supported {
        let px = (head.x.floor().max(0.0) as usize).min(shape.width - 1);
        let py = (head.y.floor().max(0.0) as usize).min(shape.height - 1);
        return Kernel {
            cells: vec![(shape.index(px, py), 1.0)],
            supported: opts.support.is_none(),
        };
    }
    for c in &mut cells {
        c.1 /= total;
    }
    if let Some(bits) = opts.quantum_bits {
        quantize(&mut cells, bits);
    }
    Kernel { cells, supported }
}

fn quantize(cells: &mut [(usize, f64)], bits: u32) {
    let scale = (2.0f64).powi(bits as i32);
    let mut peak = 0;
    let mut sum = 0.0;
    for c in cells.iter_mut() {
        c.1 = (c.1 * scale).floor() / scale;
        sum += c.1;
    }
    for (i, c) in cells.iter().enumerate() {
        if c.1 > cells[peak].1 {
            peak = i;
        }
    }
    // 1 - sum is itself a multiple of 2^-bits, so this stays exact
    cells[peak].1 += 1.0 - sum;
}

/// Plain unit-mass rasterization with ordered accumulation.
pub fn rasterize_density(
    heads: &[HeadPoint],
    params: &[KernelParams],
    shape: GridShape,
) -> Result<DensityField> {
    rasterize_density_with(heads, params, shape, &RasterOptions::default()).map(|r| r.field)
}

pub fn rasterize_density_with(
    heads: &[HeadPoint],
    params: &[KernelParams],
    shape: GridShape,
    opts: &RasterOptions,
) -> Result<Rasterized> {
    if heads.len() != params.len() {
        return Err(Error::Invalid(format!(
            "{} heads but {} kernel parameter sets",
            heads.len(),
            params.len()
        )));
    }
    if let Some(h) = heads.iter().find(|h| !shape.contains(h.x, h.y)) {
        return Err(Error::Invalid(format!(
            "head ({}, {}) lies outside the {shape} grid",
            h.x, h.y
        )));
    }
    if let Some(p) = params.iter().find(|p| !(p.sigma > 0.0 && p.truncation_radius > 0.0)) {
        return Err(Error::Invalid(format!("invalid kernel parameters {p:?}")));
    }
    if let Some((mask, _)) = opts.support {
        shape.expect_same(mask.shape())?;
    }

    let n = shape.len();
    let (values, unsupported) = match opts.reduction {
        Reduction::Ordered => {
            let kernels: Vec<Kernel> = heads
                .par_iter()
                .zip(params)
                .map(|(h, p)| kernel(h, p, shape, opts))
                .collect();
            let mut values = vec![0.0; n];
            for k in &kernels {
                for &(i, v) in &k.cells {
                    values[i] += v;
                }
            }
            (values, kernels.iter().filter(|k| !k.supported).count())
        }
        Reduction::Parallel => heads
            .par_iter()
            .zip(params)
            .fold(
                || (vec![0.0; n], 0usize),
                |(mut acc, miss), (h, p)| {
                    let k = kernel(h, p, shape, opts);
                    for &(i, v) in &k.cells {
                        acc[i] += v;
                    }
                    (acc, miss + usize::from(!k.supported))
                },
            )
            .reduce(
                || (vec![0.0; n], 0),
                |(mut a, ma), (b, mb)| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    (a, ma + mb)
                },
            ),
    };
    Ok(Rasterized {
        field: DensityField::new(shape, values)?,
        unsupported,
    })
}
