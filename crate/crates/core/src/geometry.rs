//! Axis-aligned boxes and the overlap metrics used as matching costs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("box coordinates must be finite")]
    NonFinite,
    #[error("box width and height must be positive, got {w} x {h}")]
    NonPositiveSize { w: f64, h: f64 },
}

/// Top-left corner plus width/height, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(GeometryError::NonPositiveSize { w, h });
        }
        Ok(Self { x, y, w, h })
    }

    /// Builds a box from center, aspect ratio `w / h` and height.
    pub fn from_xyah(cx: f64, cy: f64, aspect: f64, h: f64) -> Self {
        let w = aspect * h;
        Self {
            x: cx - w / 2.0,
            y: cy - h / 2.0,
            w,
            h,
        }
    }

    pub fn to_xyah(&self) -> [f64; 4] {
        let (cx, cy) = self.center();
        [cx, cy, self.w / self.h, self.h]
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }

    fn intersection_area(&self, other: &Self) -> f64 {
        let iw = (self.right().min(other.right()) - self.x.max(other.x)).max(0.0);
        let ih = (self.bottom().min(other.bottom()) - self.y.max(other.y)).max(0.0);
        iw * ih
    }
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Complete IoU: IoU minus the normalized center distance and an
/// aspect-ratio consistency term.
///
/// The raw expression can dip below -1 for tiny, distant boxes with opposite
/// aspect ratios; the result is saturated at -1 so the derived cost stays in
/// `[0, 2]`.
pub fn ciou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iou = iou(a, b);

    let (acx, acy) = a.center();
    let (bcx, bcy) = b.center();
    let rho2 = (acx - bcx).powi(2) + (acy - bcy).powi(2);

    let cw = a.right().max(b.right()) - a.x.min(b.x);
    let ch = a.bottom().max(b.bottom()) - a.y.min(b.y);
    let c2 = cw * cw + ch * ch;

    let v = (4.0 / (PI * PI)) * ((a.w / a.h).atan() - (b.w / b.h).atan()).powi(2);
    let alpha = if v == 0.0 { 0.0 } else { v / ((1.0 - iou) + v) };

    (iou - rho2 / c2 - alpha * v).clamp(-1.0, 1.0)
}

pub fn iou_cost(a: &BoundingBox, b: &BoundingBox) -> f64 {
    1.0 - iou(a, b)
}

pub fn ciou_cost(a: &BoundingBox, b: &BoundingBox) -> f64 {
    1.0 - ciou(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn validates_boxes() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.0, -1.0).is_err());
        assert_eq!(
            BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0),
            Err(GeometryError::NonFinite)
        );
    }

    #[test]
    fn iou_examples() {
        let a = bb(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bb(5.0, 5.0, 2.0, 2.0)), 0.0);
        // Intersection 1x2 = 2, union 4 + 4 - 2 = 6.
        let b = bb(1.0, 0.0, 2.0, 2.0);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        assert!((iou_cost(&a, &b) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn touching_edges_do_not_overlap() {
        assert_eq!(iou(&bb(0.0, 0.0, 2.0, 2.0), &bb(2.0, 0.0, 2.0, 2.0)), 0.0);
    }

    #[test]
    fn ciou_examples() {
        let a = bb(0.0, 0.0, 4.0, 4.0);
        assert_eq!(ciou(&a, &a), 1.0);
        assert_eq!(ciou_cost(&a, &a), 0.0);

        // Same center and aspect, half the linear size: only the IoU term.
        let half = bb(1.0, 1.0, 2.0, 2.0);
        assert!((ciou(&a, &half) - 0.25).abs() < 1e-12);

        // Centers 10 apart, enclosing box 12x2: CIoU = -100/148.
        let l = bb(0.0, 0.0, 2.0, 2.0);
        let r = bb(10.0, 0.0, 2.0, 2.0);
        assert!((ciou(&l, &r) + 100.0 / 148.0).abs() < 1e-12);
        assert_eq!(iou_cost(&l, &r), 1.0);
        let cost = ciou_cost(&l, &r);
        assert!(cost > 1.0 && cost < 2.0);
    }

    #[test]
    fn aspect_penalty_applies_to_concentric_boxes() {
        let a = bb(0.0, 0.0, 4.0, 2.0);
        let b = bb(1.0, -1.0, 2.0, 4.0);
        assert!(ciou(&a, &b) < iou(&a, &b));
    }

    #[test]
    fn xyah_round_trip() {
        let b = bb(10.0, 20.0, 4.0, 8.0);
        assert_eq!(b.to_xyah(), [12.0, 24.0, 0.5, 8.0]);
        let back = BoundingBox::from_xyah(12.0, 24.0, 0.5, 8.0);
        assert_eq!(back, b);
    }

    fn any_box() -> impl Strategy<Value = BoundingBox> {
        (
            -500.0f64..500.0,
            -500.0f64..500.0,
            0.5f64..200.0,
            0.5f64..200.0,
        )
            .prop_map(|(x, y, w, h)| bb(x, y, w, h))
    }

    proptest! {
        #[test]
        fn metric_bounds_and_symmetry(a in any_box(), b in any_box()) {
            let i = iou(&a, &b);
            let c = ciou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&i));
            prop_assert!((-1.0..=1.0).contains(&c));
            prop_assert!(c <= i + 1e-12);
            prop_assert_eq!(i, iou(&b, &a));
            prop_assert!((c - ciou(&b, &a)).abs() < 1e-12);
            prop_assert!((0.0..=2.0).contains(&ciou_cost(&a, &b)));
        }

        #[test]
        fn translation_invariance(a in any_box(), b in any_box(), dx in -100.0f64..100.0, dy in -100.0f64..100.0) {
            let (ta, tb) = (a.translated(dx, dy), b.translated(dx, dy));
            prop_assert!((iou(&a, &b) - iou(&ta, &tb)).abs() < 1e-9);
            prop_assert!((ciou(&a, &b) - ciou(&ta, &tb)).abs() < 1e-9);
        }

        #[test]
        fn unit_metric_only_for_identical(a in any_box(), b in any_box()) {
            prop_assert_eq!(iou(&a, &a), 1.0);
            prop_assert_eq!(ciou(&a, &a), 1.0);
            if a != b {
                prop_assert!(iou(&a, &b) < 1.0);
                prop_assert!(ciou(&a, &b) < 1.0);
            }
        }
    }
}
