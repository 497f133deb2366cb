use crate::detect::{DetectionSet, DetectionSource, DetectorGridSpec, GridPrediction};
use crate::scene::{BoundingBox, GridShape};

/// Class-specific confidence: `Pr(class | object) * (Pr(object) * IOU)`.
#[inline]
pub fn combine_confidence(class_prob: f64, box_conf: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&class_prob) && (0.0..=1.0).contains(&box_conf));
    class_prob * box_conf
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub detections: DetectionSet,
    /// Tensor entries outside `[0, 1]` (or NaN) that were clamped.
    pub clamped_values: usize,
    /// Boxes that passed the threshold but had zero extent after clamping.
    pub degenerate: usize,
}

impl Decoded {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.clamped_values > 0 {
            w.push(format!(
                "{} prediction tensor values outside [0, 1] were clamped",
                self.clamped_values
            ));
        }
        if self.degenerate > 0 {
            w.push(format!("{} zero-area boxes dropped", self.degenerate));
        }
        w
    }
}

fn unit(v: f32, clamped: &mut usize) -> f64 {
    let v = v as f64;
    if v.is_nan() {
        *clamped += 1;
        0.0
    } else if !(0.0..=1.0).contains(&v) {
        *clamped += 1;
        v.clamp(0.0, 1.0)
    } else {
        v
    }
}

/// Decodes every box whose class-specific score reaches `score_threshold`.
/// Boxes are clipped to the image; ones left without area are dropped.
pub fn decode(pred: &GridPrediction, score_threshold: f64) -> Decoded {
    let spec = pred.spec;
    let (w, h) = (pred.shape.width as f64, pred.shape.height as f64);
    let (cell_w, cell_h) = (w / spec.s as f64, h / spec.s as f64);
    let mut clamped = 0;
    let mut degenerate = 0;
    let mut boxes = Vec::new();

    for row in 0..spec.s {
        for col in 0..spec.s {
            let co = spec.class_offset(row, col);
            let class_prob = pred.values[co..co + spec.c]
                .iter()
                .map(|&p| unit(p, &mut clamped))
                .fold(0.0, f64::max);
            for k in 0..spec.b {
                let o = spec.box_offset(row, col, k);
                let [x, y, bw, bh, conf] =
                    std::array::from_fn(|i| unit(pred.values[o + i], &mut clamped));
                let score = combine_confidence(class_prob, conf);
                if score < score_threshold {
                    continue;
                }
                let cx = (col as f64 + x) * cell_w;
                let cy = (row as f64 + y) * cell_h;
                let (half_w, half_h) = (0.5 * bw * w, 0.5 * bh * h);
                let b = BoundingBox {
                    x_min: (cx - half_w).clamp(0.0, w),
                    y_min: (cy - half_h).clamp(0.0, h),
                    x_max: (cx + half_w).clamp(0.0, w),
                    y_max: (cy + half_h).clamp(0.0, h),
                    score,
                };
                if b.x_min < b.x_max && b.y_min < b.y_max {
                    boxes.push(b);
                } else {
                    degenerate += 1;
                }
            }
        }
    }
    Decoded {
        detections: DetectionSet::new(boxes, DetectionSource::External),
        clamped_values: clamped,
        degenerate,
    }
}

/// Inverse of the center decode: the cell `(row, col)` containing the point
/// and the in-cell offsets `(x, y)`.
pub fn encode_center(
    cx: f64,
    cy: f64,
    spec: DetectorGridSpec,
    shape: GridShape,
) -> (usize, usize, f64, f64) {
    // snap values a rounding error away from a cell edge back onto it
    let snap = |g: f64| if (g - g.round()).abs() < 1e-9 { g.round() } else { g };
    let gx = snap(cx * spec.s as f64 / shape.width as f64);
    let gy = snap(cy * spec.s as f64 / shape.height as f64);
    let col = (gx.floor().max(0.0) as usize).min(spec.s - 1);
    let row = (gy.floor().max(0.0) as usize).min(spec.s - 1);
    (row, col, gx - col as f64, gy - row as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(w: usize, h: usize) -> GridShape {
        GridShape::new(w, h).unwrap()
    }

    #[test]
    fn confidence_products() {
        assert!((combine_confidence(0.8, 0.5) - 0.4).abs() < 1e-15);
        assert_eq!(combine_confidence(1.0, 0.37), 0.37);
        assert_eq!(combine_confidence(0.0, 0.9), 0.0);
    }

    #[test]
    fn all_zero_tensor_is_empty() {
        let pred = GridPrediction::zeros(DetectorGridSpec::default(), shape(640, 480));
        let d = decode(&pred, 0.2);
        assert!(d.detections.is_empty());
        assert_eq!(d.clamped_values, 0);
    }

    #[test]
    fn single_centered_cell() {
        let mut pred = GridPrediction::zeros(DetectorGridSpec::default(), shape(700, 700));
        let s = 1.0 / 7.0;
        pred.set_box(3, 3, 0, [0.5, 0.5, s, s, 1.0]);
        pred.set_class_probs(3, 3, &[1.0]);
        let d = decode(&pred, 0.2);
        assert_eq!(d.detections.len(), 1);
        let b = d.detections.boxes[0];
        assert!(((b.x_min + b.x_max) / 2.0 - 350.0).abs() < 1e-4);
        assert!(((b.y_min + b.y_max) / 2.0 - 350.0).abs() < 1e-4);
        assert!((b.width() - 100.0).abs() < 1e-4);
        assert!((b.height() - 100.0).abs() < 1e-4);
        assert_eq!(b.score, 1.0);
    }

    #[test]
    fn zero_threshold_keeps_low_score() {
        let mut pred = GridPrediction::zeros(DetectorGridSpec::default(), shape(700, 700));
        pred.set_box(1, 2, 1, [0.25, 0.75, 0.1, 0.2, 0.2]);
        pred.set_class_probs(1, 2, &[0.5]);
        let d = decode(&pred, 0.0);
        // the zero-extent boxes of every other slot are dropped, not emitted
        assert_eq!(d.detections.len(), 1);
        assert!((d.detections.boxes[0].score - 0.1).abs() < 1e-6);
        assert_eq!(d.degenerate, 7 * 7 * 2 - 1);
    }

    #[test]
    fn boxes_clipped_to_image() {
        let mut pred = GridPrediction::zeros(DetectorGridSpec::default(), shape(70, 70));
        pred.set_box(0, 0, 0, [0.0, 0.0, 0.5, 0.5, 1.0]);
        pred.set_class_probs(0, 0, &[1.0]);
        let b = decode(&pred, 0.2).detections.boxes[0];
        assert_eq!((b.x_min, b.y_min), (0.0, 0.0));
        assert!((b.x_max - 17.5).abs() < 1e-4);
    }

    #[test]
    fn out_of_range_values_are_clamped_and_counted() {
        let mut pred = GridPrediction::zeros(DetectorGridSpec::default(), shape(70, 70));
        pred.set_box(2, 2, 0, [0.5, 0.5, 0.2, 0.2, 3.0]);
        pred.set_class_probs(2, 2, &[-1.0]);
        pred.set_box(4, 4, 0, [0.5, 0.5, 0.2, 0.2, 1.0]);
        pred.set_class_probs(4, 4, &[f32::NAN]);
        let d = decode(&pred, 0.0);
        assert_eq!(d.clamped_values, 3);
        assert!(d.detections.boxes.iter().all(|b| b.score == 0.0));
        assert!(!d.warnings().is_empty());
    }

    proptest! {
        #[test]
        fn decode_bounds_and_center_roundtrip(
            cells in prop::collection::vec(
                (0usize..7, 0usize..7, 0usize..2, 0.0f32..1.0, 0.0f32..1.0, 0.01f32..0.3, 0.01f32..0.3, 0.0f32..=1.0, 0.0f32..=1.0),
                0..40),
            threshold in 0.0f64..1.0,
            w in 50usize..2000,
            h in 50usize..2000,
        ) {
            let spec = DetectorGridSpec::default();
            let shape = shape(w, h);
            let mut pred = GridPrediction::zeros(spec, shape);
            for &(r, c, k, x, y, bw, bh, conf, p) in &cells {
                pred.set_box(r, c, k, [x, y, bw, bh, conf]);
                pred.set_class_probs(r, c, &[p]);
            }
            let d = decode(&pred, threshold);
            prop_assert!(d.detections.len() <= spec.s * spec.s * spec.b);
            for b in &d.detections.boxes {
                prop_assert!(b.score >= threshold);
                prop_assert!(b.x_min >= 0.0 && b.x_max <= w as f64);
                prop_assert!(b.y_min >= 0.0 && b.y_max <= h as f64);
            }
            // in-bounds boxes: the decoded center re-encodes to the tensor offsets
            let (cw, ch) = (w as f64 / 7.0, h as f64 / 7.0);
            for r in 0..7 {
                for c in 0..7 {
                    for k in 0..2 {
                        let o = spec.box_offset(r, c, k);
                        let v = &pred.values[o..o + 5];
                        let (x, y) = (v[0] as f64, v[1] as f64);
                        let (cx, cy) = ((c as f64 + x) * cw, (r as f64 + y) * ch);
                        let (half_w, half_h) = (0.5 * v[2] as f64 * w as f64, 0.5 * v[3] as f64 * h as f64);
                        let inside = cx - half_w >= 0.0 && cx + half_w <= w as f64
                            && cy - half_h >= 0.0 && cy + half_h <= h as f64;
                        if !inside || x >= 1.0 || y >= 1.0 {
                            continue;
                        }
                        let (rr, cc, ex, ey) = encode_center(cx, cy, spec, shape);
                        prop_assert_eq!((rr, cc), (r, c));
                        prop_assert!((ex - x).abs() < 1e-6 && (ey - y).abs() < 1e-6);
                    }
                }
            }
        }
    }
}
