//! Axis-aligned pixel boxes, IoU, box-offset coding and non-maximum
//! suppression.

use serde::{Deserialize, Serialize};

/// Box in continuous pixel coordinates; pixel `(x, y)` covers
/// `[x, x+1) × [y, y+1)`, so a single-pixel box is `(x, y, x+1, y+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn is_valid(&self) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1 && [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite())
    }

    pub fn within(&self, width: usize, height: usize) -> bool {
        self.x0 >= 0.0 && self.y0 >= 0.0 && self.x1 <= width as f64 && self.y1 <= height as f64
    }

    pub fn clip(&self, width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        Self::new(
            self.x0.clamp(0.0, w),
            self.y0.clamp(0.0, h),
            self.x1.clamp(0.0, w),
            self.y1.clamp(0.0, h),
        )
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let iw = (self.x1.min(other.x1) - self.x0.max(other.x0)).max(0.0);
        let ih = (self.y1.min(other.y1) - self.y0.max(other.y0)).max(0.0);
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Regression target `(dx, dy, dw, dh)` taking `self` (an anchor) to
    /// `target`: center shift in anchor units, log size ratio.
    pub fn encode(&self, target: &BBox) -> [f64; 4] {
        let (ax, ay) = self.center();
        let (tx, ty) = target.center();
        let (aw, ah) = (self.width(), self.height());
        [
            (tx - ax) / aw,
            (ty - ay) / ah,
            (target.width() / aw).ln(),
            (target.height() / ah).ln(),
        ]
    }

    /// Inverse of [`BBox::encode`]. Log-size offsets are clamped to keep
    /// decoded boxes finite.
    pub fn decode(&self, d: [f64; 4]) -> BBox {
        const MAX_LOG: f64 = 4.0;
        let (ax, ay) = self.center();
        let (aw, ah) = (self.width(), self.height());
        BBox::from_center(
            ax + d[0] * aw,
            ay + d[1] * ah,
            aw * d[2].clamp(-MAX_LOG, MAX_LOG).exp(),
            ah * d[3].clamp(-MAX_LOG, MAX_LOG).exp(),
        )
    }
}

/// Greedy NMS: visit boxes by descending score (ties by index) and drop
/// any box overlapping an already kept one with IoU above `threshold`.
/// Returns kept indices in visit order.
pub fn nms(boxes: &[BBox], scores: &[f64], threshold: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut keep: Vec<usize> = Vec::new();
    for i in order {
        if keep.iter().all(|&k| boxes[k].iou(&boxes[i]) <= threshold) {
            keep.push(i);
        }
    }
    keep
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn iou_basics() {
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        let b = BBox::new(1.0, 0.0, 3.0, 2.0);
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&BBox::new(5.0, 5.0, 6.0, 6.0)), 0.0);
    }

    #[test]
    fn encode_decode_identity() {
        let a = BBox::new(10.0, 20.0, 42.0, 36.0);
        let t = BBox::new(12.5, 18.0, 30.0, 50.0);
        let back = a.decode(a.encode(&t));
        for (u, v) in [(back.x0, t.x0), (back.y0, t.y0), (back.x1, t.x1), (back.y1, t.y1)] {
            assert!((u - v).abs() < 1e-9);
        }
        assert_eq!(a.encode(&a), [0.0; 4]);
    }

    #[test]
    fn nms_suppresses_overlaps() {
        let boxes = [
            BBox::new(0.0, 0.0, 10.0, 10.0),
            BBox::new(1.0, 1.0, 11.0, 11.0),
            BBox::new(20.0, 20.0, 30.0, 30.0),
        ];
        let keep = nms(&boxes, &[0.6, 0.9, 0.5], 0.5);
        assert_eq!(keep, vec![1, 2]);
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0.0..50.0, 0.0..50.0, 1.0..30.0, 1.0..30.0)
            .prop_map(|(x, y, w, h)| BBox::new(x, y, x + w, y + h))
    }

    proptest! {
        #[test]
        fn nms_is_idempotent(boxes in prop::collection::vec(arb_box(), 0..25),
                             seed in prop::collection::vec(0.0..1.0f64, 25)) {
            let scores: Vec<f64> = seed[..boxes.len()].to_vec();
            let once = nms(&boxes, &scores, 0.5);
            let kb: Vec<BBox> = once.iter().map(|&i| boxes[i]).collect();
            let ks: Vec<f64> = once.iter().map(|&i| scores[i]).collect();
            let twice = nms(&kb, &ks, 0.5);
            prop_assert_eq!(twice.len(), once.len());
            let mapped: Vec<usize> = twice.iter().map(|&j| once[j]).collect();
            prop_assert_eq!(mapped, once);
        }

        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let u = a.iou(&b);
            prop_assert!((u - b.iou(&a)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&u));
        }
    }
}
