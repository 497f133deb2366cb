//! Split-line extraction from labeled clusters.
//!
//! The Far pixel set is cleaned (largest 4-connected component kept, holes
//! filled), reduced to one boundary height per column, and simplified to a
//! polyline whose vertical deviation from every column's boundary stays
//! within the tolerance.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::partition::cluster::ClusterState;
use crate::polyline::Polyline;
use crate::scene::{GridShape, Region};

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub polyline: Polyline,
    /// Far rows per column after cleanup.
    pub boundary: Vec<usize>,
    /// Set when some column had Near above Far and the envelope was used.
    pub warning: Option<String>,
}

pub fn extract_polyline(
    labels: &[Region],
    state: &ClusterState,
    shape: GridShape,
    simplify_tol: f64,
) -> Result<Extraction> {
    shape.expect_same(state.shape)?;
    if labels.len() != state.cluster_count() {
        return Err(Error::Invalid(format!(
            "{} labels for {} clusters",
            labels.len(),
            state.cluster_count()
        )));
    }
    if !labels.contains(&Region::Far) || !labels.contains(&Region::Near) {
        return Err(Error::MissingRegion);
    }
    let mut far: Vec<bool> = state
        .assignments
        .iter()
        .map(|&a| labels[a] == Region::Far)
        .collect();
    keep_largest_component(&mut far, shape);
    fill_holes(&mut far, shape);
    let (boundary, banded) = column_boundary(&far, shape);
    let warning = (!banded).then(|| {
        "far region is not an upper band; split line follows the column-wise envelope".to_string()
    });
    let polyline = simplify(&boundary, shape, simplify_tol)?;
    Ok(Extraction {
        polyline,
        boundary,
        warning,
    })
}

fn neighbors4(i: usize, shape: GridShape) -> impl Iterator<Item = usize> {
    let (x, y) = (i % shape.width, i / shape.width);
    let w = shape.width;
    [
        (x > 0).then(|| i - 1),
        (x + 1 < w).then(|| i + 1),
        (y > 0).then(|| i - w),
        (y + 1 < shape.height).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}

/// Keeps only the largest 4-connected true component; the first one found
/// in scan order wins ties.
pub(crate) fn keep_largest_component(mask: &mut [bool], shape: GridShape) {
    let mut component = vec![usize::MAX; mask.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || component[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        component[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            size += 1;
            for j in neighbors4(i, shape) {
                if mask[j] && component[j] == usize::MAX {
                    component[j] = id;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    let Some(largest) = (0..sizes.len()).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
    else {
        return;
    };
    for (m, &c) in mask.iter_mut().zip(&component) {
        *m = *m && c == largest;
    }
}

/// Sets every false pixel not 4-connected to the image border to true.
pub(crate) fn fill_holes(mask: &mut [bool], shape: GridShape) {
    let mut outside = vec![false; mask.len()];
    let mut queue = VecDeque::new();
    let (w, h) = (shape.width, shape.height);
    let border = (0..w)
        .flat_map(|x| [shape.index(x, 0), shape.index(x, h - 1)])
        .chain((0..h).flat_map(|y| [shape.index(0, y), shape.index(w - 1, y)]));
    for i in border {
        if !mask[i] && !outside[i] {
            outside[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for j in neighbors4(i, shape) {
            if !mask[j] && !outside[j] {
                outside[j] = true;
                queue.push_back(j);
            }
        }
    }
    for (m, &o) in mask.iter_mut().zip(&outside) {
        *m = !o;
    }
}

/// Per column, one past the lowest Far row. Returns whether every column is
/// a clean top band (all Far rows contiguous from row 0).
fn column_boundary(far: &[bool], shape: GridShape) -> (Vec<usize>, bool) {
    let mut banded = true;
    let boundary = (0..shape.width)
        .map(|x| {
            let column = |y: usize| far[shape.index(x, y)];
            let run = (0..shape.height).take_while(|&y| column(y)).count();
            let envelope = (0..shape.height).rev().find(|&y| column(y)).map_or(0, |y| y + 1);
            if envelope != run {
                banded = false;
            }
            envelope
        })
        .collect();
    (boundary, banded)
}

/// Douglas-Peucker on vertical deviation over the column-center samples
/// `(x + 0.5, boundary[x])`, then the end segments are extended to cover
/// `[0, width]`.
fn simplify(boundary: &[usize], shape: GridShape, tol: f64) -> Result<Polyline> {
    let w = shape.width as f64;
    if boundary.len() == 1 {
        return Polyline::flat(boundary[0] as f64, 0.0, w);
    }
    let pts: Vec<(f64, f64)> = boundary
        .iter()
        .enumerate()
        .map(|(x, &b)| (x as f64 + 0.5, b as f64))
        .collect();
    let mut keep = vec![false; pts.len()];
    keep[0] = true;
    keep[pts.len() - 1] = true;
    let mut stack = vec![(0, pts.len() - 1)];
    while let Some((a, b)) = stack.pop() {
        let (xa, ya) = pts[a];
        let (xb, yb) = pts[b];
        let slope = (yb - ya) / (xb - xa);
        let worst = (a + 1..b)
            .map(|i| (i, (pts[i].1 - (ya + slope * (pts[i].0 - xa))).abs()))
            .max_by(|p, q| p.1.total_cmp(&q.1).then(q.0.cmp(&p.0)));
        if let Some((i, dev)) = worst {
            if dev > tol {
                keep[i] = true;
                stack.push((a, i));
                stack.push((i, b));
            }
        }
    }
    let mut verts: Vec<(f64, f64)> = pts
        .iter()
        .zip(&keep)
        .filter_map(|(p, &k)| k.then_some(*p))
        .collect();
    let n = verts.len();
    let first_slope = (verts[1].1 - verts[0].1) / (verts[1].0 - verts[0].0);
    verts[0] = (0.0, verts[0].1 - 0.5 * first_slope);
    let last_slope = (verts[n - 1].1 - verts[n - 2].1) / (verts[n - 1].0 - verts[n - 2].0);
    verts[n - 1] = (w, verts[n - 1].1 + 0.5 * last_slope);
    Polyline::from_vertices(&verts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::cluster::ClusterFeature;
    use crate::polyline::mask_from_polyline;
    use proptest::prelude::*;

    /// Two-cluster state: cluster 1 (Far) is every pixel where `far(x, y)`.
    fn two_cluster_state(shape: GridShape, far: impl Fn(usize, usize) -> bool) -> ClusterState {
        let mut assignments = Vec::with_capacity(shape.len());
        for y in 0..shape.height {
            for x in 0..shape.width {
                assignments.push(usize::from(far(x, y)));
            }
        }
        let center = ClusterFeature {
            feature: 0.0,
            px: 0.0,
            py: 0.0,
        };
        ClusterState {
            shape,
            assignments,
            centers: vec![center; 2],
            grid_step: 1.0,
            compactness: 0.1,
            energies: vec![],
        }
    }

    const LABELS: [Region; 2] = [Region::Near, Region::Far];

    fn max_deviation(p: &Polyline, boundary: &[usize]) -> f64 {
        boundary
            .iter()
            .enumerate()
            .map(|(x, &b)| (p.eval(x as f64 + 0.5).unwrap() - b as f64).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn flat_band() {
        let shape = GridShape::new(100, 40).unwrap();
        let st = two_cluster_state(shape, |_, y| y < 10);
        let ex = extract_polyline(&LABELS, &st, shape, 2.0).unwrap();
        assert_eq!(ex.polyline.segments().len(), 1);
        let s = ex.polyline.segments()[0];
        assert_eq!((s.k, s.b), (0.0, 10.0));
        assert_eq!(ex.polyline.domain(), (0.0, 100.0));
        assert!(ex.warning.is_none());
    }

    #[test]
    fn unit_staircase_becomes_one_slope() {
        let shape = GridShape::new(100, 60).unwrap();
        let st = two_cluster_state(shape, |x, y| y < 10 + x / 4);
        let ex = extract_polyline(&LABELS, &st, shape, 1.0).unwrap();
        assert_eq!(ex.polyline.segments().len(), 1);
        assert!(ex.polyline.segments()[0].k > 0.0);
        assert!(max_deviation(&ex.polyline, &ex.boundary) <= 1.0);
    }

    #[test]
    fn no_far_cluster_is_error() {
        let shape = GridShape::new(10, 10).unwrap();
        let st = two_cluster_state(shape, |_, y| y < 3);
        let labels = [Region::Near, Region::Near];
        assert!(matches!(
            extract_polyline(&labels, &st, shape, 2.0),
            Err(Error::MissingRegion)
        ));
    }

    #[test]
    fn cleanup_drops_specks_and_fills_holes() {
        let shape = GridShape::new(30, 20).unwrap();
        // band of 6 rows with a hole, plus an isolated far speck lower down
        let st = two_cluster_state(shape, |x, y| {
            let hole = (10..13).contains(&x) && (2..4).contains(&y);
            (y < 6 && !hole) || (x == 20 && y == 15)
        });
        let ex = extract_polyline(&LABELS, &st, shape, 0.5).unwrap();
        assert!(ex.warning.is_none());
        assert!(ex.boundary.iter().all(|&b| b == 6));
    }

    #[test]
    fn non_band_falls_back_to_envelope() {
        let shape = GridShape::new(20, 20).unwrap();
        // band with an overhang: a stem down columns 3..5 turns right under
        // columns 6..10, leaving open Near pixels between band and overhang
        let st = two_cluster_state(shape, |x, y| {
            y < 5 || ((3..6).contains(&x) && y < 15) || ((3..11).contains(&x) && (12..15).contains(&y))
        });
        let ex = extract_polyline(&LABELS, &st, shape, 0.5).unwrap();
        assert!(ex.warning.is_some());
        assert_eq!(ex.boundary[7], 15);
        assert_eq!(ex.boundary[0], 5);
    }

    #[test]
    fn single_column() {
        let shape = GridShape::new(1, 10).unwrap();
        let st = two_cluster_state(shape, |_, y| y < 4);
        let ex = extract_polyline(&LABELS, &st, shape, 2.0).unwrap();
        assert_eq!(ex.polyline.eval(0.5).unwrap(), 4.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn polyline_reproduces_band(
            heights in prop::collection::vec(0usize..30, 2..60),
            smooth in 1usize..8,
            tol in 0.0f64..4.0,
        ) {
            // moving average so the band has runs and slopes
            let w = heights.len();
            let band: Vec<usize> = (0..w)
                .map(|x| {
                    let lo = x.saturating_sub(smooth);
                    let hi = (x + smooth).min(w - 1);
                    (heights[lo..=hi].iter().sum::<usize>() / (hi - lo + 1)).max(1)
                })
                .collect();
            let shape = GridShape::new(w, 32).unwrap();
            let st = two_cluster_state(shape, |x, y| y < band[x]);
            let ex = extract_polyline(&LABELS, &st, shape, tol).unwrap();
            prop_assert_eq!(&ex.boundary, &band);
            prop_assert!(max_deviation(&ex.polyline, &band) <= tol + 1e-9);

            let mask = mask_from_polyline(&ex.polyline, shape).unwrap();
            for (x, &b) in band.iter().enumerate() {
                let rows = (0..shape.height).filter(|&y| mask.get(x, y) == Region::Far).count();
                prop_assert!((rows as f64 - b as f64).abs() <= tol + 1.0);
            }
        }
    }
}
