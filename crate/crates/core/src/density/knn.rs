//! Mean distance from each head to its nearest neighbors, via a uniform
//! bucket grid searched in expanding rings.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scene::HeadPoint;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborStats {
    /// Distances to the `m` nearest other heads, ascending.
    pub distances: Vec<f64>,
    /// `None` when the head has no neighbors (`m = 0`).
    pub mean: Option<f64>,
    /// Requested neighbor count.
    pub k: usize,
}

impl NeighborStats {
    pub fn m(&self) -> usize {
        self.distances.len()
    }
}

struct BucketGrid {
    x0: f64,
    y0: f64,
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(points: &[HeadPoint], per_cell: usize) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in points {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let (w, h) = ((x1 - x0).max(1e-9), (y1 - y0).max(1e-9));
        let mut cell = (w * h * per_cell as f64 / points.len() as f64).sqrt().max(1e-9);
        let limit = 4 * points.len() + 16;
        let dims = |cell: f64| ((w / cell).floor() as usize + 1, (h / cell).floor() as usize + 1);
        // near-collinear sets would otherwise get a huge, mostly empty grid
        while dims(cell).0.saturating_mul(dims(cell).1) > limit {
            cell *= 1.5;
        }
        let (cols, rows) = dims(cell);
        let mut buckets = vec![Vec::new(); cols * rows];
        for (i, p) in points.iter().enumerate() {
            let (c, r) = Self::locate(x0, y0, cell, cols, rows, p);
            buckets[r * cols + c].push(i);
        }
        Self {
            x0,
            y0,
            cell,
            cols,
            rows,
            buckets,
        }
    }

    fn locate(x0: f64, y0: f64, cell: f64, cols: usize, rows: usize, p: &HeadPoint) -> (usize, usize) {
        let c = (((p.x - x0) / cell).floor() as usize).min(cols - 1);
        let r = (((p.y - y0) / cell).floor() as usize).min(rows - 1);
        (c, r)
    }

    /// Bucket indices on the square ring at Chebyshev distance `ring`.
    fn ring(&self, c: usize, r: usize, ring: usize) -> impl Iterator<Item = usize> + '_ {
        let (c, r, ring) = (c as isize, r as isize, ring as isize);
        let (cols, rows) = (self.cols as isize, self.rows as isize);
        (r - ring..=r + ring).flat_map(move |rr| {
            let edge_row = rr == r - ring || rr == r + ring;
            let step = if edge_row || ring == 0 { 1 } else { (2 * ring) as usize };
            (c - ring..=c + ring)
                .step_by(step.max(1))
                .filter(move |&cc| rr >= 0 && rr < rows && cc >= 0 && cc < cols)
                .map(move |cc| (rr * cols + cc) as usize)
        })
    }
}

/// Keeps the `m` smallest `(distance, index)` pairs in ascending order.
fn push_best(best: &mut Vec<(f64, usize)>, m: usize, cand: (f64, usize)) {
    if best.len() == m {
        let worst = best[m - 1];
        if cand.0 > worst.0 || (cand.0 == worst.0 && cand.1 > worst.1) {
            return;
        }
        best.pop();
    }
    let pos = best.partition_point(|b| b.0 < cand.0 || (b.0 == cand.0 && b.1 < cand.1));
    best.insert(pos, cand);
}

/// For each head, the distances to its `m = min(k, n - 1)` nearest other
/// heads (ties by index) and their mean.
pub fn knn_mean_distance(heads: &[HeadPoint], k: usize) -> Result<Vec<NeighborStats>> {
    if heads.is_empty() {
        return Err(Error::Invalid("nearest-neighbor query on an empty head list".into()));
    }
    if k == 0 {
        return Err(Error::Invalid("knn k must be at least 1".into()));
    }
    let m = k.min(heads.len() - 1);
    if m == 0 {
        return Ok(vec![
            NeighborStats {
                distances: Vec::new(),
                mean: None,
                k,
            };
            heads.len()
        ]);
    }
    let grid = BucketGrid::new(heads, m + 1);
    let max_ring = grid.cols.max(grid.rows);
    Ok(heads
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let (c, r) = BucketGrid::locate(grid.x0, grid.y0, grid.cell, grid.cols, grid.rows, q);
            let mut best: Vec<(f64, usize)> = Vec::with_capacity(m + 1);
            for ring in 0..=max_ring {
                for b in grid.ring(c, r, ring) {
                    for &j in &grid.buckets[b] {
                        if j != i {
                            push_best(&mut best, m, (q.distance(&heads[j]), j));
                        }
                    }
                }
                // anything in a farther ring is at least `ring * cell` away
                if best.len() == m && best[m - 1].0 <= ring as f64 * grid.cell {
                    break;
                }
            }
            let distances: Vec<f64> = best.into_iter().map(|(d, _)| d).collect();
            let mean = distances.iter().sum::<f64>() / m as f64;
            NeighborStats {
                distances,
                mean: Some(mean),
                k,
            }
        })
        .collect())
}
