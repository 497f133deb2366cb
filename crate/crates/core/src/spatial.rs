//! Spatial constraint on near-view detections.
//!
//! A detection is deleted when its box center lies strictly above the split
//! polyline (the far-view side, where the density map counts instead).
//! Centers exactly on the line stay with the detector; the far mask uses the
//! complementary strict region, so nobody is counted twice.

use serde::Serialize;

use crate::detect::DetectionSet;
use crate::polyline::Polyline;
use crate::scene::BoundingBox;

pub fn box_center(b: &BoundingBox) -> (f64, f64) {
    ((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeletedBox {
    pub bbox: BoundingBox,
    pub center: (f64, f64),
    /// Zero-based index of the polyline segment that triggered deletion.
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub scene_id: String,
    pub kept: DetectionSet,
    pub deleted: Vec<DeletedBox>,
    /// Kept boxes whose center x fell outside the polyline's domain.
    pub out_of_domain: Vec<BoundingBox>,
}

/// Counts for run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FilterSummary {
    pub input: usize,
    pub kept: usize,
    pub deleted: usize,
    pub out_of_domain: usize,
}

impl FilterReport {
    pub fn summary(&self) -> FilterSummary {
        FilterSummary {
            input: self.kept.len() + self.deleted.len(),
            kept: self.kept.len(),
            deleted: self.deleted.len(),
            out_of_domain: self.out_of_domain.len(),
        }
    }
}

/// Decision for one point: `Some(segment)` when it lies strictly above the
/// line, `None` when it stays, `Err(())` when `x` is outside the domain.
fn above_line(p: &Polyline, x: f64, y: f64) -> Result<Option<usize>, ()> {
    let i = p.segment_index(x).ok_or(())?;
    let s = &p.segments()[i];
    Ok((y < s.eval(x)).then_some(i))
}

pub fn apply_spatial_constraint(dets: &DetectionSet, p: &Polyline, scene_id: &str) -> FilterReport {
    let mut kept = Vec::with_capacity(dets.len());
    let mut deleted = Vec::new();
    let mut out_of_domain = Vec::new();
    for b in &dets.boxes {
        let (xc, yc) = box_center(b);
        match above_line(p, xc, yc) {
            Ok(Some(segment)) => deleted.push(DeletedBox {
                bbox: *b,
                center: (xc, yc),
                segment,
            }),
            Ok(None) => kept.push(*b),
            Err(()) => {
                kept.push(*b);
                out_of_domain.push(*b);
            }
        }
    }
    if !out_of_domain.is_empty() {
        log::warn!(
            "scene {scene_id}: {} detections outside the polyline domain were kept",
            out_of_domain.len()
        );
    }
    FilterReport {
        scene_id: scene_id.to_string(),
        kept: DetectionSet::new(kept, dets.source),
        deleted,
        out_of_domain,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DetectionSource;

    fn centered(xc: f64, yc: f64) -> BoundingBox {
        BoundingBox::new(xc - 5.0, yc - 5.0, xc + 5.0, yc + 5.0, 0.9).unwrap()
    }

    #[test]
    fn centers() {
        let b = BoundingBox::new(0.0, 0.0, 10.0, 10.0, 1.0).unwrap();
        assert_eq!(box_center(&b), (5.0, 5.0));
        let b = BoundingBox::new(2.0, 4.0, 6.0, 8.0, 1.0).unwrap();
        assert_eq!(box_center(&b), (4.0, 6.0));
        let (a, c, w, h) = (3.25, 7.5, 11.0, 4.5);
        let b = BoundingBox::new(a, c, a + w, c + h, 1.0).unwrap();
        assert_eq!(box_center(&b), (a + w / 2.0, c + h / 2.0));
    }

    #[test]
    fn strictly_above_is_deleted() {
        let p = Polyline::flat(100.0, 0.0, 200.0).unwrap();
        let dets = DetectionSet::new(vec![centered(50.0, 65.0), centered(50.0, 100.0)], DetectionSource::External);
        let r = apply_spatial_constraint(&dets, &p, "s");
        assert_eq!(r.deleted.len(), 1);
        assert_eq!(r.deleted[0].center, (50.0, 65.0));
        assert_eq!(r.deleted[0].segment, 0);
        assert_eq!(r.kept.boxes, vec![centered(50.0, 100.0)]);
    }

    #[test]
    fn empty_input() {
        let p = Polyline::flat(100.0, 0.0, 200.0).unwrap();
        let r = apply_spatial_constraint(&DetectionSet::empty(DetectionSource::Oracle), &p, "s");
        assert!(r.kept.is_empty() && r.deleted.is_empty());
    }

    #[test]
    fn records_triggering_segment() {
        let p = Polyline::from_vertices(&[(0.0, 50.0), (100.0, 50.0), (200.0, 150.0)]).unwrap();
        let dets = DetectionSet::new(vec![centered(150.0, 90.0)], DetectionSource::External);
        let r = apply_spatial_constraint(&dets, &p, "s");
        assert_eq!(r.deleted[0].segment, 1);
    }

    #[test]
    fn out_of_domain_is_kept_and_flagged() {
        let p = Polyline::flat(100.0, 0.0, 40.0).unwrap();
        let dets = DetectionSet::new(vec![centered(60.0, 10.0)], DetectionSource::External);
        let r = apply_spatial_constraint(&dets, &p, "s");
        assert_eq!(r.kept.len(), 1);
        assert_eq!(r.out_of_domain.len(), 1);
        assert_eq!(r.summary().input, 1);
    }
}
