use super::model::{DetectorModel, MIN_BOX_AREA};
use super::proposals::{anchor_boxes, ForegroundIntegral};
use crate::annotate::{argmax, BoxStage, PartBox};
use crate::bbox::{nms, BBox};
use crate::render::ViewImage;

pub const NMS_IOU: f64 = 0.5;

/// A scored part box with its region feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub view_index: usize,
    pub bbox: BBox,
    /// Probabilities over the `C` part classes.
    pub probs: Vec<f64>,
    pub feature: Vec<f64>,
}

impl Detection {
    pub fn class(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_part_box(&self) -> PartBox {
        PartBox {
            bbox: self.bbox,
            probs: self.probs.clone(),
            stage: BoxStage::Detection,
        }
    }
}

/// Scores anchors on `view`, regresses them, drops background and
/// low-confidence boxes and suppresses overlaps within each class.
/// Detections come out sorted by class, then descending score.
pub fn detect(model: &DetectorModel, view: &ViewImage, view_index: usize, score_threshold: f64) -> Vec<Detection> {
    let cfg = &model.config;
    let c = cfg.num_classes;
    let bb = model.backbone(view);
    let fg = ForegroundIntegral::new(view);
    let anchors = anchor_boxes(view.width, view.height, cfg.anchor_stride, &cfg.anchor_scales, &cfg.anchor_aspects);
    let mut cands: Vec<(BBox, Vec<f64>)> = Vec::new();
    for a in anchors {
        if fg.fraction(&a) < cfg.min_foreground {
            continue;
        }
        let mut b = a;
        let mut out = model.head(&bb, &b);
        let mut probs = model.class_probs(&out);
        for _ in 0..cfg.refine_steps {
            if argmax(&probs) == c {
                break;
            }
            let nb = b.decode(out.offsets).clip(view.width, view.height);
            if !nb.is_valid() || nb.area() < MIN_BOX_AREA {
                break;
            }
            b = nb;
            out = model.head(&bb, &b);
            probs = model.class_probs(&out);
        }
        if argmax(&probs) == c {
            continue;
        }
        let fgsum: f64 = probs[..c].iter().sum();
        let part: Vec<f64> = probs[..c].iter().map(|p| p / fgsum).collect();
        let fin = b.decode(out.offsets).clip(view.width, view.height);
        if !fin.is_valid() || fin.area() < MIN_BOX_AREA {
            continue;
        }
        if part.iter().copied().fold(0.0, f64::max) > score_threshold {
            cands.push((fin, part));
        }
    }
    let mut dets = Vec::new();
    for class in 0..c {
        let idx: Vec<usize> = (0..cands.len()).filter(|&i| argmax(&cands[i].1) == class).collect();
        let boxes: Vec<BBox> = idx.iter().map(|&i| cands[i].0).collect();
        let scores: Vec<f64> = idx.iter().map(|&i| cands[i].1[class]).collect();
        for k in nms(&boxes, &scores, NMS_IOU) {
            let (bbox, probs) = &cands[idx[k]];
            dets.push(Detection {
                view_index,
                bbox: *bbox,
                probs: probs.clone(),
                feature: model.head(&bb, bbox).feature,
            });
        }
    }
    dets
}

/// For every ground-truth box, the highest IoU reached by a detection of
/// the same class, or 0 when that class was never detected.
pub fn best_ious(dets: &[Detection], gt: &[PartBox]) -> Vec<f64> {
    gt.iter()
        .map(|g| {
            let c = g.class();
            dets.iter()
                .filter(|d| d.class() == c)
                .map(|d| d.bbox.iou(&g.bbox))
                .fold(0.0, f64::max)
        })
        .collect()
}

