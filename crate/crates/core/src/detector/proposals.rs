use rand::Rng;

use super::model::{RoiTarget, MIN_BOX_AREA};
use crate::annotate::PartBox;
use crate::bbox::BBox;
use crate::render::{ViewImage, BACKGROUND};

/// Height-to-width ratios of the default anchor set.
pub const DEFAULT_ASPECTS: [f64; 3] = [1.0, 2.0, 0.5];

pub const POSITIVE_IOU: f64 = 0.5;
pub const BACKGROUND_IOU: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalSource {
    Anchor,
    GroundTruth,
    Jittered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub bbox: BBox,
    pub source: ProposalSource,
}

/// Anchors centred on a `stride` grid, one per scale and aspect, clipped to
/// the image. Anchors whose clipped area falls below the pooling minimum are
/// dropped.
pub fn anchor_boxes(width: usize, height: usize, stride: usize, scales: &[f64], aspects: &[f64]) -> Vec<BBox> {
    let mut out = Vec::new();
    let s = stride as f64;
    for gy in 0..height.div_ceil(stride) {
        for gx in 0..width.div_ceil(stride) {
            let cx = (gx as f64 + 0.5) * s;
            let cy = (gy as f64 + 0.5) * s;
            for &scale in scales {
                for &r in aspects {
                    let w = scale / r.sqrt();
                    let h = scale * r.sqrt();
                    let b = BBox::from_center(cx, cy, w, h).clip(width, height);
                    if b.is_valid() && b.area() >= MIN_BOX_AREA {
                        out.push(b);
                    }
                }
            }
        }
    }
    out
}

/// Dense anchor proposals with the default aspect ratios.
pub fn propose_regions(view: &ViewImage, stride: usize, scales: &[f64]) -> Vec<Proposal> {
    anchor_boxes(view.width, view.height, stride, scales, &DEFAULT_ASPECTS)
        .into_iter()
        .map(|bbox| Proposal {
            bbox,
            source: ProposalSource::Anchor,
        })
        .collect()
}

/// Training proposals: the anchors plus every ground-truth box verbatim.
pub fn propose_training_regions(view: &ViewImage, stride: usize, scales: &[f64], gt: &[PartBox]) -> Vec<Proposal> {
    let mut out = propose_regions(view, stride, scales);
    out.extend(gt.iter().map(|g| Proposal {
        bbox: g.bbox,
        source: ProposalSource::GroundTruth,
    }));
    out
}

/// Summed-area table of the non-background mask.
#[derive(Debug, Clone)]
pub struct ForegroundIntegral {
    width: usize,
    sums: Vec<u32>,
}

impl ForegroundIntegral {
    pub fn new(view: &ViewImage) -> Self {
        let w = view.width;
        let mut sums = vec![0u32; (w + 1) * (view.height + 1)];
        for y in 0..view.height {
            let mut row = 0;
            for x in 0..w {
                row += (view.pixels[y * w + x] != BACKGROUND) as u32;
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + row;
            }
        }
        Self { width: w, sums }
    }

    /// Fraction of pixels in the integer hull of `b` that are foreground.
    pub fn fraction(&self, b: &BBox) -> f64 {
        let x0 = b.x0.floor().max(0.0) as usize;
        let y0 = b.y0.floor().max(0.0) as usize;
        let x1 = (b.x1.ceil() as usize).min(self.width).max(x0);
        let h = self.sums.len() / (self.width + 1) - 1;
        let y1 = (b.y1.ceil() as usize).min(h).max(y0);
        let area = (x1 - x0) * (y1 - y0);
        if area == 0 {
            return 0.0;
        }
        let s = |x: usize, y: usize| self.sums[y * (self.width + 1) + x] as i64;
        let n = s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0);
        n as f64 / area as f64
    }
}

/// Random perturbations of a box: centre shifts up to `shift × size` and
/// log-size changes up to `log_scale`, clipped to the image.
pub fn jitter_box<R: Rng>(b: &BBox, shift: f64, log_scale: f64, width: usize, height: usize, rng: &mut R) -> BBox {
    let (cx, cy) = b.center();
    let w = b.width();
    let h = b.height();
    let ncx = cx + rng.gen_range(-shift..=shift) * w;
    let ncy = cy + rng.gen_range(-shift..=shift) * h;
    let nw = w * rng.gen_range(-log_scale..=log_scale).exp();
    let nh = h * rng.gen_range(-log_scale..=log_scale).exp();
    BBox::from_center(ncx, ncy, nw, nh).clip(width, height)
}

/// Matches each proposal to its highest-IoU ground-truth box. Positives
/// (IoU ≥ 0.5) get the box class and regression target, proposals below 0.3
/// become background, the rest are ignored (`None`).
pub fn label_proposals(proposals: &[BBox], gt: &[PartBox], num_classes: usize) -> Vec<Option<RoiTarget>> {
    proposals
        .iter()
        .map(|p| {
            let best = gt
                .iter()
                .map(|g| (p.iou(&g.bbox), g))
                .max_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((iou, g)) if iou >= POSITIVE_IOU => Some(RoiTarget {
                    bbox: *p,
                    class: g.class(),
                    offsets: Some(p.encode(&g.bbox)),
                }),
                Some((iou, _)) if iou >= BACKGROUND_IOU => None,
                _ => Some(RoiTarget {
                    bbox: *p,
                    class: num_classes,
                    offsets: None,
                }),
            }
        })
        .collect()
}
