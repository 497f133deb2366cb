use crate::detect::DetectionSet;
use crate::scene::BoundingBox;

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).min(1.0)
    }
}

/// Greedy suppression: highest score first (ties by smaller `x_min`, then
/// `y_min`), a box survives iff its IOU with every kept box is below
/// `iou_threshold`.
pub fn nms(dets: &DetectionSet, iou_threshold: f64) -> DetectionSet {
    let mut order: Vec<&BoundingBox> = dets.boxes.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.x_min.total_cmp(&b.x_min))
            .then(a.y_min.total_cmp(&b.y_min))
    });
    let mut kept: Vec<BoundingBox> = Vec::with_capacity(order.len());
    for b in order {
        if kept.iter().all(|k| iou(k, b) < iou_threshold) {
            kept.push(*b);
        }
    }
    DetectionSet::new(kept, dets.source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DetectionSource;
    use proptest::prelude::*;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64, s: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1, s).unwrap()
    }

    fn set(boxes: Vec<BoundingBox>) -> DetectionSet {
        DetectionSet::new(boxes, DetectionSource::External)
    }

    #[test]
    fn iou_fixtures() {
        let a = bx(0.0, 0.0, 1.0, 1.0, 1.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bx(2.0, 2.0, 3.0, 3.0, 1.0)), 0.0);
        // touching edges share no area
        assert_eq!(iou(&a, &bx(1.0, 0.0, 2.0, 1.0, 1.0)), 0.0);
        let shifted = bx(0.5, 0.0, 1.5, 1.0, 1.0);
        assert!((iou(&a, &shifted) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn nms_basics() {
        let one = set(vec![bx(0.0, 0.0, 2.0, 2.0, 0.3)]);
        assert_eq!(nms(&one, 0.5), one);

        let twins = set(vec![bx(0.0, 0.0, 2.0, 2.0, 0.8), bx(0.0, 0.0, 2.0, 2.0, 0.9)]);
        let out = nms(&twins, 0.5);
        assert_eq!(out.len(), 1);
        assert_eq!(out.boxes[0].score, 0.9);

        let disjoint = set(vec![
            bx(0.0, 0.0, 1.0, 1.0, 0.5),
            bx(5.0, 0.0, 6.0, 1.0, 0.7),
            bx(0.0, 5.0, 1.0, 6.0, 0.6),
        ]);
        assert_eq!(nms(&disjoint, 0.5).len(), 3);
    }

    #[test]
    fn nms_ties_break_by_position() {
        let a = bx(3.0, 0.0, 5.0, 2.0, 0.5);
        let b = bx(2.5, 0.0, 4.5, 2.0, 0.5);
        let out = nms(&set(vec![a, b]), 0.3);
        assert_eq!(out.boxes, vec![b]);
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (0.0f64..100.0, 0.0f64..100.0, 1.0f64..30.0, 1.0f64..30.0, 0.0f64..=1.0)
            .prop_map(|(x, y, w, h, s)| bx(x, y, x + w, y + h, s))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_reflexive(a in arb_box(), b in arb_box()) {
            prop_assert_eq!(iou(&a, &b), iou(&b, &a));
            prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
            let v = iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn nms_idempotent_subset_separated(
            boxes in prop::collection::vec(arb_box(), 0..40),
            t in 0.05f64..0.95,
        ) {
            let input = set(boxes);
            let once = nms(&input, t);
            prop_assert_eq!(nms(&once, t), once.clone());
            prop_assert!(once.boxes.iter().all(|b| input.boxes.contains(b)));
            for (i, a) in once.boxes.iter().enumerate() {
                for b in &once.boxes[i + 1..] {
                    prop_assert!(iou(a, b) < t);
                }
            }
        }
    }
}
