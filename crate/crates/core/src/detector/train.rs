use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{DetectorConfig, DetectorModel, RoiTarget, MIN_BOX_AREA};
use super::proposals::{anchor_boxes, jitter_box, label_proposals, ForegroundIntegral};
use crate::annotate::{PartBox, ViewAnnotation};
use crate::error::{Error, Result};
use crate::nn::{Optimizer, OptimizerConfig, Parameters, TrainLog};
use crate::render::ViewImage;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorTrainConfig {
    pub steps: usize,
    /// Views per gradient step.
    pub views_per_step: usize,
    pub rois_per_view: usize,
    /// Upper bound on the positive share of sampled rois.
    pub positive_fraction: f64,
    /// Jittered copies of each ground-truth box added per step.
    pub jitter_per_box: usize,
    pub jitter_shift: f64,
    pub jitter_log_scale: f64,
    /// Weight of the localization term.
    pub lambda: f64,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Default for DetectorTrainConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            views_per_step: 1,
            rois_per_view: 64,
            positive_fraction: 0.5,
            jitter_per_box: 4,
            jitter_shift: 0.2,
            jitter_log_scale: 0.3,
            lambda: 1.0,
            optimizer: OptimizerConfig::default(),
            seed: 0,
        }
    }
}

struct PreparedView<'a> {
    view: &'a ViewImage,
    gt: &'a [PartBox],
    positives: Vec<RoiTarget>,
    negatives: Vec<RoiTarget>,
}

fn prepare<'a>(
    dataset: &'a [(ViewImage, ViewAnnotation)],
    cfg: &DetectorConfig,
) -> Result<Vec<PreparedView<'a>>> {
    if dataset.is_empty() {
        return Err(Error::Training("empty detector dataset".into()));
    }
    let mut out = Vec::with_capacity(dataset.len());
    let mut total_pos = 0;
    for (view, ann) in dataset {
        if !ann.is_homogeneous() {
            return Err(Error::Training(format!(
                "annotation {} view {} mixes box stages",
                ann.shape_id, ann.view_index
            )));
        }
        if let Some(b) = ann.boxes.iter().find(|b| b.probs.len() != cfg.num_classes) {
            return Err(Error::DimensionMismatch {
                expected: cfg.num_classes,
                actual: b.probs.len(),
                context: "annotation class vector",
            });
        }
        let fg = ForegroundIntegral::new(view);
        let mut boxes: Vec<_> = anchor_boxes(
            view.width,
            view.height,
            cfg.anchor_stride,
            &cfg.anchor_scales,
            &cfg.anchor_aspects,
        )
        .into_iter()
        .filter(|b| fg.fraction(b) >= cfg.min_foreground)
        .collect();
        boxes.extend(ann.boxes.iter().map(|b| b.bbox));
        let (positives, negatives): (Vec<_>, Vec<_>) = label_proposals(&boxes, &ann.boxes, cfg.num_classes)
            .into_iter()
            .flatten()
            .partition(|t| t.offsets.is_some());
        total_pos += positives.len();
        out.push(PreparedView {
            view,
            gt: &ann.boxes,
            positives,
            negatives,
        });
    }
    if total_pos == 0 {
        return Err(Error::Training(format!(
            "no proposal matches any ground-truth box at IoU >= 0.5 across {} views; check annotations and anchor scales",
            dataset.len()
        )));
    }
    Ok(out)
}

fn sample_rois(p: &PreparedView, cfg: &DetectorConfig, tc: &DetectorTrainConfig, rng: &mut ChaCha8Rng) -> Vec<RoiTarget> {
    let mut positives = p.positives.clone();
    let mut jittered = Vec::new();
    for g in p.gt {
        for _ in 0..tc.jitter_per_box {
            let b = jitter_box(&g.bbox, tc.jitter_shift, tc.jitter_log_scale, p.view.width, p.view.height, rng);
            if b.is_valid() && b.area() >= MIN_BOX_AREA {
                jittered.push(b);
            }
        }
    }
    for t in label_proposals(&jittered, p.gt, cfg.num_classes).into_iter().flatten() {
        if t.offsets.is_some() {
            positives.push(t);
        }
    }
    let max_pos = ((tc.rois_per_view as f64 * tc.positive_fraction).round() as usize).max(1);
    let n_pos = positives.len().min(max_pos);
    let n_neg = p.negatives.len().min(tc.rois_per_view.saturating_sub(n_pos));
    let mut rois: Vec<RoiTarget> = positives.choose_multiple(rng, n_pos).cloned().collect();
    rois.extend(p.negatives.choose_multiple(rng, n_neg).cloned());
    rois
}

fn run(
    mut model: DetectorModel,
    dataset: &[(ViewImage, ViewAnnotation)],
    tc: &DetectorTrainConfig,
) -> Result<(DetectorModel, TrainLog)> {
    let prepared = prepare(dataset, &model.config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut opt = Optimizer::new(tc.optimizer);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut cursor = order.len();
    let mut log = TrainLog::default();
    let per_step = tc.views_per_step.max(1);
    for _ in 0..tc.steps {
        let mut grad = model.zeros_like();
        let mut loss = 0.0;
        for _ in 0..per_step {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let p = &prepared[order[cursor]];
            cursor += 1;
            let rois = sample_rois(p, &model.config, tc, &mut rng);
            if rois.is_empty() {
                continue;
            }
            let w = 1.0 / (rois.len() * per_step) as f64;
            loss += model.accumulate_grad(p.view, &rois, tc.lambda, w, &mut grad);
        }
        opt.step(&mut model, &grad);
        if !loss.is_finite() || !model.all_finite() {
            return Err(Error::Training(format!(
                "detector diverged at step {} (loss {loss}); lower the learning rate",
                log.losses.len()
            )));
        }
        log.losses.push(loss);
    }
    Ok((model, log))
}

/// Trains a freshly initialised detector on `(view, annotation)` pairs.
pub fn train_detector(
    dataset: &[(ViewImage, ViewAnnotation)],
    model_cfg: DetectorConfig,
    tc: &DetectorTrainConfig,
) -> Result<(DetectorModel, TrainLog)> {
    let model = DetectorModel::new(model_cfg, tc.seed)?;
    run(model, dataset, tc)
}

/// Continues training an existing detector on new ground truth.
pub fn finetune_detector(
    model: &DetectorModel,
    dataset: &[(ViewImage, ViewAnnotation)],
    tc: &DetectorTrainConfig,
) -> Result<(DetectorModel, TrainLog)> {
    run(model.clone(), dataset, tc)
}
