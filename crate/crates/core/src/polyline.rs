//! Piecewise-linear split line between the near and far regions.
//!
//! Segment `i` covers the half-open interval `[x_start, x_end)`; the last
//! segment is closed on the right.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{GridShape, Region, RegionMask};

/// Largest allowed gap between adjacent segments, in pixels, at a shared x.
pub const CONTINUITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x_start: f64,
    pub x_end: f64,
    pub k: f64,
    pub b: f64,
}

impl Segment {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.k * x + self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Polyline {
    segments: Vec<Segment>,
}

impl<'de> Deserialize<'de> for Polyline {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let segments = Vec::<Segment>::deserialize(d)?;
        Polyline::new(segments).map_err(serde::de::Error::custom)
    }
}

impl Polyline {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Config("polyline has no segments".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            let finite = [s.x_start, s.x_end, s.k, s.b].iter().all(|v| v.is_finite());
            if !finite || s.x_start >= s.x_end {
                return Err(Error::Config(format!("polyline segment {i} is empty: {s:?}")));
            }
        }
        for (i, pair) in segments.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if a.x_end != b.x_start {
                return Err(Error::Config(format!(
                    "polyline segments {i} and {} are not contiguous ({} vs {})",
                    i + 1,
                    a.x_end,
                    b.x_start
                )));
            }
            let (ya, yb) = (a.eval(a.x_end), b.eval(b.x_start));
            if (ya - yb).abs() > CONTINUITY_TOL * ya.abs().max(1.0) {
                return Err(Error::Config(format!(
                    "polyline is discontinuous at x = {}: {ya} vs {yb}",
                    a.x_end
                )));
            }
        }
        Ok(Self { segments })
    }

    /// Horizontal line `y = level` over `[x0, x1]`.
    pub fn flat(level: f64, x0: f64, x1: f64) -> Result<Self> {
        Self::new(vec![Segment {
            x_start: x0,
            x_end: x1,
            k: 0.0,
            b: level,
        }])
    }

    /// Builds the polyline through `vertices`, which must have strictly
    /// increasing x.
    pub fn from_vertices(vertices: &[(f64, f64)]) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Config("polyline needs at least two vertices".into()));
        }
        let segments = vertices
            .windows(2)
            .map(|w| {
                let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                let k = (y1 - y0) / (x1 - x0);
                Segment {
                    x_start: x0,
                    x_end: x1,
                    k,
                    b: y0 - k * x0,
                }
            })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn domain(&self) -> (f64, f64) {
        (
            self.segments[0].x_start,
            self.segments[self.segments.len() - 1].x_end,
        )
    }

    /// Vertex list (x_0, y_0) .. (x_n, y_n), each y taken from the segment
    /// starting there (the last from the final segment's right end).
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<_> = self
            .segments
            .iter()
            .map(|s| (s.x_start, s.eval(s.x_start)))
            .collect();
        let last = self.segments[self.segments.len() - 1];
        v.push((last.x_end, last.eval(last.x_end)));
        v
    }

    /// Index of the segment whose interval contains `x`.
    pub fn segment_index(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = self.segments.partition_point(|s| s.x_end <= x);
        Some(i.min(self.segments.len() - 1))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        self.segment_index(x)
            .map(|i| self.segments[i].eval(x))
            .ok_or(Error::Domain { x, lo, hi })
    }

    /// Checks that the domain covers `[0, width]`.
    pub fn check_covers(&self, width: usize) -> Result<()> {
        let (lo, hi) = self.domain();
        let w = width as f64;
        if lo > 0.0 {
            return Err(Error::UncoveredDomain { lo: 0.0, hi: lo.min(w) });
        }
        if hi < w {
            return Err(Error::UncoveredDomain { lo: hi.max(0.0), hi: w });
        }
        Ok(())
    }
}

/// Labels pixel `(x, y)` Far iff its center lies strictly above the line:
/// `y + 0.5 < polyline(x + 0.5)`.
pub fn mask_from_polyline(p: &Polyline, shape: GridShape) -> Result<RegionMask> {
    p.check_covers(shape.width)?;
    let mut labels = vec![Region::Near; shape.len()];
    for x in 0..shape.width {
        let far_rows = far_rows_in_column(p.eval(x as f64 + 0.5)?, shape.height);
        for y in 0..far_rows {
            labels[shape.index(x, y)] = Region::Far;
        }
    }
    RegionMask::new(shape, labels)
}

/// Number of rows whose pixel center lies strictly above `line_y`.
pub(crate) fn far_rows_in_column(line_y: f64, height: usize) -> usize {
    // rows y with y + 0.5 < line_y, i.e. y < line_y - 0.5
    let bound = (line_y - 0.5).ceil();
    if bound <= 0.0 {
        0
    } else {
        (bound as usize).min(height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(x_start: f64, x_end: f64, k: f64, b: f64) -> Segment {
        Segment { x_start, x_end, k, b }
    }

    #[test]
    fn eval_constant() {
        let p = Polyline::flat(100.0, 0.0, 50.0).unwrap();
        assert_eq!(p.eval(20.0).unwrap(), 100.0);
    }

    #[test]
    fn eval_boundary_belongs_to_next_segment() {
        let p = Polyline::new(vec![seg(0.0, 10.0, 1.0, 0.0), seg(10.0, 20.0, -1.0, 20.0)]).unwrap();
        assert_eq!(p.segment_index(10.0), Some(1));
        assert_eq!(p.eval(10.0).unwrap(), 10.0);
        // closed right end on the final segment
        assert_eq!(p.segment_index(20.0), Some(1));
        assert_eq!(p.eval(20.0).unwrap(), 0.0);
    }

    #[test]
    fn eval_hand_arithmetic() {
        let p = Polyline::new(vec![seg(0.0, 5.0, 2.0, 3.0)]).unwrap();
        assert_eq!(p.eval(4.0).unwrap(), 11.0);
    }

    #[test]
    fn eval_outside_domain() {
        let p = Polyline::flat(1.0, 0.0, 5.0).unwrap();
        assert!(matches!(p.eval(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(p.eval(5.1), Err(Error::Domain { .. })));
        assert!(p.eval(f64::NAN).is_err());
    }

    #[test]
    fn rejects_gaps_and_jumps() {
        assert!(Polyline::new(vec![]).is_err());
        assert!(Polyline::new(vec![seg(0.0, 5.0, 0.0, 1.0), seg(6.0, 9.0, 0.0, 1.0)]).is_err());
        assert!(Polyline::new(vec![seg(0.0, 5.0, 0.0, 1.0), seg(5.0, 9.0, 0.0, 2.0)]).is_err());
        assert!(Polyline::new(vec![seg(3.0, 3.0, 0.0, 1.0)]).is_err());
    }

    #[test]
    fn json_roundtrip_validates() {
        let p = Polyline::from_vertices(&[(0.0, 10.0), (40.0, 30.0), (100.0, 20.0)]).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("x_start"));
        let back: Polyline = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let gap = r#"[{"x_start":0,"x_end":5,"k":0,"b":1},{"x_start":6,"x_end":9,"k":0,"b":1}]"#;
        assert!(serde_json::from_str::<Polyline>(gap).is_err());
    }

    #[test]
    fn mask_flat_at_zero_is_all_near() {
        let shape = GridShape::new(5, 3).unwrap();
        let m = mask_from_polyline(&Polyline::flat(0.0, 0.0, 5.0).unwrap(), shape).unwrap();
        assert_eq!(m.count(Region::Near), 15);
    }

    #[test]
    fn mask_flat_at_height_is_all_far() {
        let shape = GridShape::new(5, 3).unwrap();
        let m = mask_from_polyline(&Polyline::flat(3.0, 0.0, 5.0).unwrap(), shape).unwrap();
        assert_eq!(m.count(Region::Far), 15);
    }

    #[test]
    fn mask_flat_two_on_four_by_four() {
        let shape = GridShape::new(4, 4).unwrap();
        let m = mask_from_polyline(&Polyline::flat(2.0, 0.0, 4.0).unwrap(), shape).unwrap();
        // enumerate the 16 pixel centers directly
        for y in 0..4 {
            for x in 0..4 {
                let expect = if (y as f64) + 0.5 < 2.0 { Region::Far } else { Region::Near };
                assert_eq!(m.get(x, y), expect);
            }
        }
        assert_eq!(m.count(Region::Far), 8);
    }

    #[test]
    fn mask_reports_uncovered_interval() {
        let shape = GridShape::new(10, 4).unwrap();
        let p = Polyline::flat(2.0, 0.0, 7.0).unwrap();
        match mask_from_polyline(&p, shape) {
            Err(Error::UncoveredDomain { lo, hi }) => assert_eq!((lo, hi), (7.0, 10.0)),
            other => panic!("unexpected {other:?}"),
        }
        let p = Polyline::flat(2.0, 1.0, 10.0).unwrap();
        assert!(matches!(
            mask_from_polyline(&p, shape),
            Err(Error::UncoveredDomain { lo, hi }) if lo == 0.0 && hi == 1.0
        ));
    }

    fn arb_polyline(width: f64, height: f64) -> impl Strategy<Value = Polyline> {
        (1usize..6)
            .prop_flat_map(move |n| {
                (
                    prop::collection::vec(0.05f64..1.0, n),
                    prop::collection::vec(-0.2 * height..1.2 * height, n + 1),
                )
            })
            .prop_map(move |(widths, ys)| {
                let total: f64 = widths.iter().sum();
                let mut x = 0.0;
                let mut verts = vec![(0.0, ys[0])];
                for (i, w) in widths.iter().enumerate() {
                    x += w / total * width;
                    let xi = if i + 1 == widths.len() { width } else { x };
                    verts.push((xi, ys[i + 1]));
                }
                Polyline::from_vertices(&verts).unwrap()
            })
    }

    proptest! {
        #[test]
        fn continuous_at_every_breakpoint(p in arb_polyline(64.0, 48.0)) {
            for w in p.segments().windows(2) {
                let left = w[0].eval(w[0].x_end);
                let value = p.eval(w[1].x_start).unwrap();
                prop_assert!((left - value).abs() < 1e-9);
            }
        }

        #[test]
        fn mask_partitions_pixels(p in arb_polyline(37.0, 23.0)) {
            let shape = GridShape::new(37, 23).unwrap();
            let m = mask_from_polyline(&p, shape).unwrap();
            prop_assert_eq!(m.count(Region::Near) + m.count(Region::Far), shape.len());
        }

        #[test]
        fn column_heights_match_brute_force(p in arb_polyline(40.0, 30.0)) {
            let shape = GridShape::new(40, 30).unwrap();
            let m = mask_from_polyline(&p, shape).unwrap();
            for x in 0..shape.width {
                let line = p.eval(x as f64 + 0.5).unwrap();
                // scan the column top-down
                let far_run = (0..shape.height).take_while(|&y| m.get(x, y) == Region::Far).count();
                let expected = (0..shape.height).filter(|&y| (y as f64 + 0.5) < line).count();
                prop_assert_eq!(far_run, expected);
                // nothing Far below the run
                prop_assert!((far_run..shape.height).all(|y| m.get(x, y) == Region::Near));
                let rounded = (line.round().max(0.0) as usize).min(shape.height);
                prop_assert!((far_run as i64 - rounded as i64).abs() <= 1);
            }
        }
    }
}
