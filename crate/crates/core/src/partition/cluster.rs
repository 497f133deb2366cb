//! Superpixel-style local k-means over (depth, x, y).
//!
//! Distance between a pixel and a center is
//! `D = sqrt(d_depth^2 + (compactness / step)^2 * d_xy^2)`, with
//! `step = sqrt(pixels / target_clusters)`. Each center only competes for
//! pixels inside its `2*step` square window.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scene::{DepthMap, GridShape};

/// Center residual below which iteration stops.
pub const CONVERGENCE_RESIDUAL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterFeature {
    pub feature: f64,
    pub px: f64,
    pub py: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub shape: GridShape,
    /// Cluster id per pixel, row-major; ids are dense in `0..centers.len()`.
    pub assignments: Vec<usize>,
    pub centers: Vec<ClusterFeature>,
    pub grid_step: f64,
    pub compactness: f64,
    /// Total energy `sum D^2` after the initial assignment and after each
    /// iteration.
    pub energies: Vec<f64>,
}

impl ClusterState {
    pub fn cluster_count(&self) -> usize {
        self.centers.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy)]
struct Metric {
    spatial_weight: f64,
}

impl Metric {
    #[inline]
    fn dist2(&self, feature: f64, x: f64, y: f64, c: &ClusterFeature) -> f64 {
        let df = feature - c.feature;
        let dx = x - c.px;
        let dy = y - c.py;
        df * df + self.spatial_weight * (dx * dx + dy * dy)
    }
}

/// Runs the clustering. Deterministic: seeds sit on a regular grid and the
/// assignment is an order-independent per-pixel minimum.
pub fn cluster_depth(
    depth: &DepthMap,
    target_cluster_count: usize,
    compactness: f64,
    max_iters: usize,
) -> Result<ClusterState> {
    let shape = depth.shape();
    let n = shape.len();
    if n < 2 {
        return Err(Error::Invalid("cannot cluster a single-pixel grid".into()));
    }
    if target_cluster_count < 2 || target_cluster_count > n {
        return Err(Error::Invalid(format!(
            "target cluster count {target_cluster_count} must lie in [2, {n}]"
        )));
    }
    if !(compactness > 0.0 && compactness.is_finite()) {
        return Err(Error::Invalid(format!("compactness must be > 0, got {compactness}")));
    }

    let step = (n as f64 / target_cluster_count as f64).sqrt();
    let metric = Metric {
        spatial_weight: (compactness / step).powi(2),
    };
    let mut centers = seed_centers(depth, step);
    let mut assignments = assign(depth, &centers, step, metric, None);
    let mut energies = vec![energy(depth, &assignments, &centers, metric)];

    for _ in 0..max_iters {
        let updated = update_centers(depth, &assignments, &centers);
        let residual = centers
            .iter()
            .zip(&updated)
            .map(|(a, b)| metric.dist2(a.feature, a.px, a.py, b).sqrt())
            .fold(0.0, f64::max);
        centers = updated;
        assignments = assign(depth, &centers, step, metric, Some(&assignments));
        energies.push(energy(depth, &assignments, &centers, metric));
        if residual < CONVERGENCE_RESIDUAL {
            break;
        }
    }

    let (assignments, centers) = compact(assignments, centers);
    if centers.len() < 2 {
        return Err(Error::Invalid(
            "clustering collapsed to a single cluster".into(),
        ));
    }
    Ok(ClusterState {
        shape,
        assignments,
        centers,
        grid_step: step,
        compactness,
        energies,
    })
}

/// Grid dimensions (columns, rows) for the initial centers.
fn seed_grid(shape: GridShape, step: f64) -> (usize, usize) {
    let mut nx = ((shape.width as f64 / step).round() as usize).clamp(1, shape.width);
    let mut ny = ((shape.height as f64 / step).round() as usize).clamp(1, shape.height);
    if nx * ny < 2 {
        if shape.height >= shape.width {
            ny = 2;
        } else {
            nx = 2;
        }
    }
    (nx, ny)
}

fn gradient(depth: &DepthMap, x: usize, y: usize) -> f64 {
    let shape = depth.shape();
    let left = depth.get(x.saturating_sub(1), y);
    let right = depth.get((x + 1).min(shape.width - 1), y);
    let up = depth.get(x, y.saturating_sub(1));
    let down = depth.get(x, (y + 1).min(shape.height - 1));
    (right - left).powi(2) + (down - up).powi(2)
}

/// Regular-grid seeds, each moved to the lowest-gradient pixel of its 3x3
/// neighborhood.
pub(crate) fn seed_centers(depth: &DepthMap, step: f64) -> Vec<ClusterFeature> {
    let shape = depth.shape();
    let (nx, ny) = seed_grid(shape, step);
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            // cell center in pixel-index coordinates
            let cx = (i as f64 + 0.5) * shape.width as f64 / nx as f64 - 0.5;
            let cy = (j as f64 + 0.5) * shape.height as f64 / ny as f64 - 0.5;
            let gx = (cx.round().max(0.0) as usize).min(shape.width - 1);
            let gy = (cy.round().max(0.0) as usize).min(shape.height - 1);
            let mut moved = None;
            let mut best = gradient(depth, gx, gy);
            for y in gy.saturating_sub(1)..=(gy + 1).min(shape.height - 1) {
                for x in gx.saturating_sub(1)..=(gx + 1).min(shape.width - 1) {
                    let g = gradient(depth, x, y);
                    if g < best {
                        best = g;
                        moved = Some((x, y));
                    }
                }
            }
            centers.push(match moved {
                Some((x, y)) => ClusterFeature {
                    feature: depth.get(x, y),
                    px: x as f64,
                    py: y as f64,
                },
                None => ClusterFeature {
                    feature: depth.get(gx, gy),
                    px: cx,
                    py: cy,
                },
            });
        }
    }
    centers
}

/// Centers bucketed on a `step`-sized grid so a pixel only inspects the
/// 3x3 buckets around it.
struct CenterIndex {
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl CenterIndex {
    fn new(shape: GridShape, centers: &[ClusterFeature], step: f64) -> Self {
        let cell = step.max(1.0);
        let cols = (shape.width as f64 / cell).ceil() as usize + 1;
        let rows = (shape.height as f64 / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); cols * rows];
        for (id, c) in centers.iter().enumerate() {
            let bx = ((c.px / cell).floor().max(0.0) as usize).min(cols - 1);
            let by = ((c.py / cell).floor().max(0.0) as usize).min(rows - 1);
            buckets[by * cols + bx].push(id);
        }
        Self {
            cell,
            cols,
            rows,
            buckets,
        }
    }

    fn nearby(&self, x: f64, y: f64) -> impl Iterator<Item = usize> + '_ {
        let bx = ((x / self.cell).floor() as usize).min(self.cols - 1);
        let by = ((y / self.cell).floor() as usize).min(self.rows - 1);
        let xs = bx.saturating_sub(1)..=(bx + 1).min(self.cols - 1);
        (by.saturating_sub(1)..=(by + 1).min(self.rows - 1)).flat_map(move |r| {
            xs.clone()
                .flat_map(move |c| self.buckets[r * self.cols + c].iter().copied())
        })
    }
}

/// Minimum-D assignment. A pixel's candidates are the centers whose window
/// contains it plus, when `previous` is given, its current cluster. Pixels
/// with no candidate fall back to the globally nearest center. Ties go to
/// the smaller cluster id.
fn assign(
    depth: &DepthMap,
    centers: &[ClusterFeature],
    step: f64,
    metric: Metric,
    previous: Option<&[usize]>,
) -> Vec<usize> {
    let shape = depth.shape();
    let index = CenterIndex::new(shape, centers, step);
    let mut out = vec![0usize; shape.len()];
    out.par_chunks_mut(shape.width)
        .enumerate()
        .for_each(|(y, row)| {
            let fy = y as f64;
            for (x, slot) in row.iter_mut().enumerate() {
                let fx = x as f64;
                let feature = depth.get(x, y);
                let mut best: Option<(f64, usize)> = None;
                let consider = |best: &mut Option<(f64, usize)>, id: usize| {
                    let d = metric.dist2(feature, fx, fy, &centers[id]);
                    match *best {
                        Some((bd, bid)) if d > bd || (d == bd && id >= bid) => {}
                        _ => *best = Some((d, id)),
                    }
                };
                for id in index.nearby(fx, fy) {
                    let c = &centers[id];
                    if (fx - c.px).abs() <= step && (fy - c.py).abs() <= step {
                        consider(&mut best, id);
                    }
                }
                if let Some(prev) = previous {
                    consider(&mut best, prev[shape.index(x, y)]);
                }
                if best.is_none() {
                    for id in 0..centers.len() {
                        consider(&mut best, id);
                    }
                }
                *slot = best.map(|(_, id)| id).unwrap_or(0);
            }
        });
    out
}

fn update_centers(
    depth: &DepthMap,
    assignments: &[usize],
    centers: &[ClusterFeature],
) -> Vec<ClusterFeature> {
    let shape = depth.shape();
    let mut sums = vec![(0.0f64, 0.0f64, 0.0f64, 0usize); centers.len()];
    for y in 0..shape.height {
        for x in 0..shape.width {
            let i = shape.index(x, y);
            let s = &mut sums[assignments[i]];
            s.0 += depth.values()[i];
            s.1 += x as f64;
            s.2 += y as f64;
            s.3 += 1;
        }
    }
    sums.iter()
        .zip(centers)
        .map(|(&(f, x, y, n), old)| {
            if n == 0 {
                *old
            } else {
                let n = n as f64;
                ClusterFeature {
                    feature: f / n,
                    px: x / n,
                    py: y / n,
                }
            }
        })
        .collect()
}

fn energy(depth: &DepthMap, assignments: &[usize], centers: &[ClusterFeature], metric: Metric) -> f64 {
    let shape = depth.shape();
    let mut total = 0.0;
    for y in 0..shape.height {
        for x in 0..shape.width {
            let i = shape.index(x, y);
            total += metric.dist2(depth.values()[i], x as f64, y as f64, &centers[assignments[i]]);
        }
    }
    total
}

/// Drops empty clusters and renumbers the rest densely, preserving order.
fn compact(
    assignments: Vec<usize>,
    centers: Vec<ClusterFeature>,
) -> (Vec<usize>, Vec<ClusterFeature>) {
    let mut used = vec![false; centers.len()];
    for &a in &assignments {
        used[a] = true;
    }
    let mut remap = vec![usize::MAX; centers.len()];
    let mut kept = Vec::new();
    for (id, c) in centers.into_iter().enumerate() {
        if used[id] {
            remap[id] = kept.len();
            kept.push(c);
        }
    }
    let assignments = assignments.into_iter().map(|a| remap[a]).collect();
    (assignments, kept)
}
