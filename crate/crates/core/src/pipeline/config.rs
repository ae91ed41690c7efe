use std::fmt::Write as _;
use std::path::Path;

use super::synth::ShapeCategory;
use crate::aggregate::{AggregationConfig, PoolingMode};
use crate::annotate::BoxGrouping;
use crate::captioner::{CaptionerConfig, CaptionerTrainConfig};
use crate::detector::{DetectorConfig, DetectorTrainConfig};
use crate::error::{Error, IoContext, Result};
use crate::nn::{OptimizerConfig, OptimizerKind};

/// Which caption shapes the `caption` and `eval` stages cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Train,
    Test,
}

/// Every tunable of a pipeline run. Parsed from flat `key = value` text;
/// unknown keys are errors, missing keys keep their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub category: ShapeCategory,
    /// Uncolored shapes used only for geometry ground truth.
    pub geometry_shapes: usize,
    pub caption_train: usize,
    pub caption_test: usize,
    pub samples_per_face: usize,
    pub resolution: usize,
    pub views: usize,
    pub image_size: usize,
    pub elevation: f64,
    pub min_pixels: usize,
    pub merge_boxes: bool,
    pub feature_dim: usize,
    pub conv1_channels: usize,
    pub conv2_channels: usize,
    pub anchor_stride: usize,
    pub anchor_scales: Vec<f64>,
    pub anchor_aspects: Vec<f64>,
    pub min_foreground: f64,
    pub refine_steps: usize,
    pub lambda: f64,
    pub det_optimizer: OptimizerKind,
    pub det_lr: f64,
    pub det_steps: usize,
    pub det_rois: usize,
    pub finetune_lr: f64,
    pub finetune_steps: usize,
    pub transfer_threshold: f64,
    pub rho: f64,
    pub pooling: PoolingMode,
    pub skip_absent: bool,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub cap_optimizer: OptimizerKind,
    pub cap_lr: f64,
    pub cap_steps: usize,
    pub cap_batch: usize,
    pub max_caption_len: usize,
    pub eval_split: EvalSplit,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let det = DetectorConfig::new(4, 128);
        Self {
            seed: 0,
            category: ShapeCategory::Chair,
            geometry_shapes: 16,
            caption_train: 20,
            caption_test: 4,
            samples_per_face: 100,
            resolution: 32,
            views: 12,
            image_size: 128,
            elevation: 30.0,
            min_pixels: 9,
            merge_boxes: false,
            feature_dim: det.feature_dim,
            conv1_channels: det.conv1_channels,
            conv2_channels: det.conv2_channels,
            anchor_stride: det.anchor_stride,
            anchor_scales: det.anchor_scales,
            anchor_aspects: det.anchor_aspects,
            min_foreground: det.min_foreground,
            refine_steps: det.refine_steps,
            lambda: 1.0,
            det_optimizer: OptimizerKind::Sgd,
            det_lr: 1e-5,
            det_steps: 1000,
            det_rois: 64,
            finetune_lr: 1e-5,
            finetune_steps: 500,
            transfer_threshold: 0.7,
            rho: 0.8,
            pooling: PoolingMode::Max,
            skip_absent: false,
            hidden_dim: 32,
            embed_dim: 64,
            cap_optimizer: OptimizerKind::Sgd,
            cap_lr: 1e-5,
            cap_steps: 1000,
            cap_batch: 4,
            max_caption_len: 30,
            eval_split: EvalSplit::Test,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{raw}`")))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',').map(|s| parse(key, s.trim())).collect()
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path).at(path)?)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, v)?,
            "category" => self.category = v.parse()?,
            "geometry_shapes" => self.geometry_shapes = parse(key, v)?,
            "caption_train" => self.caption_train = parse(key, v)?,
            "caption_test" => self.caption_test = parse(key, v)?,
            "samples_per_face" => self.samples_per_face = parse(key, v)?,
            "resolution" => self.resolution = parse(key, v)?,
            "views" => self.views = parse(key, v)?,
            "image_size" => self.image_size = parse(key, v)?,
            "elevation" => self.elevation = parse(key, v)?,
            "min_pixels" => self.min_pixels = parse(key, v)?,
            "merge_boxes" => self.merge_boxes = parse(key, v)?,
            "feature_dim" => self.feature_dim = parse(key, v)?,
            "conv1_channels" => self.conv1_channels = parse(key, v)?,
            "conv2_channels" => self.conv2_channels = parse(key, v)?,
            "anchor_stride" => self.anchor_stride = parse(key, v)?,
            "anchor_scales" => self.anchor_scales = parse_list(key, v)?,
            "anchor_aspects" => self.anchor_aspects = parse_list(key, v)?,
            "min_foreground" => self.min_foreground = parse(key, v)?,
            "refine_steps" => self.refine_steps = parse(key, v)?,
            "lambda" => self.lambda = parse(key, v)?,
            "det_optimizer" => self.det_optimizer = v.parse()?,
            "det_lr" => self.det_lr = parse(key, v)?,
            "det_steps" => self.det_steps = parse(key, v)?,
            "det_rois" => self.det_rois = parse(key, v)?,
            "finetune_lr" => self.finetune_lr = parse(key, v)?,
            "finetune_steps" => self.finetune_steps = parse(key, v)?,
            "transfer_threshold" => self.transfer_threshold = parse(key, v)?,
            "rho" => self.rho = parse(key, v)?,
            "pooling" => self.pooling = v.parse()?,
            "skip_absent" => self.skip_absent = parse(key, v)?,
            "hidden_dim" => self.hidden_dim = parse(key, v)?,
            "embed_dim" => self.embed_dim = parse(key, v)?,
            "cap_optimizer" => self.cap_optimizer = v.parse()?,
            "cap_lr" => self.cap_lr = parse(key, v)?,
            "cap_steps" => self.cap_steps = parse(key, v)?,
            "cap_batch" => self.cap_batch = parse(key, v)?,
            "max_caption_len" => self.max_caption_len = parse(key, v)?,
            "eval_split" => {
                self.eval_split = match v {
                    "train" => EvalSplit::Train,
                    "test" => EvalSplit::Test,
                    other => return Err(Error::Config(format!("`eval_split`: `{other}` is not train|test"))),
                }
            }
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Every key with its effective value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("category", self.category.to_string()),
            ("geometry_shapes", self.geometry_shapes.to_string()),
            ("caption_train", self.caption_train.to_string()),
            ("caption_test", self.caption_test.to_string()),
            ("samples_per_face", self.samples_per_face.to_string()),
            ("resolution", self.resolution.to_string()),
            ("views", self.views.to_string()),
            ("image_size", self.image_size.to_string()),
            ("elevation", self.elevation.to_string()),
            ("min_pixels", self.min_pixels.to_string()),
            ("merge_boxes", self.merge_boxes.to_string()),
            ("feature_dim", self.feature_dim.to_string()),
            ("conv1_channels", self.conv1_channels.to_string()),
            ("conv2_channels", self.conv2_channels.to_string()),
            ("anchor_stride", self.anchor_stride.to_string()),
            ("anchor_scales", list(&self.anchor_scales)),
            ("anchor_aspects", list(&self.anchor_aspects)),
            ("min_foreground", self.min_foreground.to_string()),
            ("refine_steps", self.refine_steps.to_string()),
            ("lambda", self.lambda.to_string()),
            ("det_optimizer", self.det_optimizer.to_string()),
            ("det_lr", self.det_lr.to_string()),
            ("det_steps", self.det_steps.to_string()),
            ("det_rois", self.det_rois.to_string()),
            ("finetune_lr", self.finetune_lr.to_string()),
            ("finetune_steps", self.finetune_steps.to_string()),
            ("transfer_threshold", self.transfer_threshold.to_string()),
            ("rho", self.rho.to_string()),
            ("pooling", self.pooling.to_string()),
            ("skip_absent", self.skip_absent.to_string()),
            ("hidden_dim", self.hidden_dim.to_string()),
            ("embed_dim", self.embed_dim.to_string()),
            ("cap_optimizer", self.cap_optimizer.to_string()),
            ("cap_lr", self.cap_lr.to_string()),
            ("cap_steps", self.cap_steps.to_string()),
            ("cap_batch", self.cap_batch.to_string()),
            ("max_caption_len", self.max_caption_len.to_string()),
            (
                "eval_split",
                match self.eval_split {
                    EvalSplit::Train => "train".into(),
                    EvalSplit::Test => "test".into(),
                },
            ),
        ]
    }

    /// Canonical `key = value` text; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Values of `keys` as `key=value` lines, for stage fingerprints.
    pub fn subset(&self, keys: &[&str]) -> String {
        let all = self.entries();
        keys.iter()
            .map(|k| {
                let v = &all.iter().find(|(n, _)| n == k).expect("known config key").1;
                format!("{k}={v}\n")
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.views == 0 {
            return fail("views must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.rho) || !(0.0..=1.0).contains(&self.transfer_threshold) {
            return fail("rho and transfer_threshold must lie in [0, 1]");
        }
        if self.geometry_shapes == 0 || self.caption_train == 0 {
            return fail("geometry_shapes and caption_train must be positive");
        }
        if self.caption_train + self.caption_test < 2 {
            return fail("at least two caption shapes are needed for CIDEr");
        }
        if self.eval_split == EvalSplit::Test && self.caption_test < 2 {
            return fail("evaluating the test split needs caption_test >= 2");
        }
        if self.resolution < 2 || self.resolution > crate::geometry::MAX_RESOLUTION {
            return fail("resolution out of range");
        }
        if self.lambda < 0.0 || self.det_lr <= 0.0 || self.cap_lr <= 0.0 || self.finetune_lr <= 0.0 {
            return fail("learning rates must be positive and lambda non-negative");
        }
        if self.samples_per_face == 0 || self.max_caption_len == 0 || self.cap_batch == 0 {
            return fail("samples_per_face, max_caption_len and cap_batch must be positive");
        }
        self.detector_config().validate()
    }

    pub fn num_classes(&self) -> usize {
        self.category.num_classes()
    }

    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            feature_dim: self.feature_dim,
            conv1_channels: self.conv1_channels,
            conv2_channels: self.conv2_channels,
            anchor_stride: self.anchor_stride,
            anchor_scales: self.anchor_scales.clone(),
            anchor_aspects: self.anchor_aspects.clone(),
            min_foreground: self.min_foreground,
            refine_steps: self.refine_steps,
            ..DetectorConfig::new(self.num_classes(), self.image_size)
        }
    }

    pub fn detector_train_config(&self, finetune: bool) -> DetectorTrainConfig {
        DetectorTrainConfig {
            steps: if finetune { self.finetune_steps } else { self.det_steps },
            rois_per_view: self.det_rois,
            lambda: self.lambda,
            optimizer: OptimizerConfig {
                kind: self.det_optimizer,
                learning_rate: if finetune { self.finetune_lr } else { self.det_lr },
                ..Default::default()
            },
            seed: self.seed.wrapping_add(if finetune { 3 } else { 2 }),
            ..Default::default()
        }
    }

    pub fn aggregation_config(&self) -> AggregationConfig {
        AggregationConfig {
            rho: self.rho,
            mode: self.pooling,
            num_classes: self.num_classes(),
            feature_dim: self.feature_dim,
        }
    }

    pub fn captioner_config(&self, vocab_size: usize) -> CaptionerConfig {
        CaptionerConfig {
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            skip_absent: self.skip_absent,
            ..CaptionerConfig::new(vocab_size, self.num_classes(), self.feature_dim)
        }
    }

    pub fn captioner_train_config(&self) -> CaptionerTrainConfig {
        CaptionerTrainConfig {
            steps: self.cap_steps,
            batch_size: self.cap_batch,
            optimizer: OptimizerConfig {
                kind: self.cap_optimizer,
                learning_rate: self.cap_lr,
                ..Default::default()
            },
            seed: self.seed.wrapping_add(4),
        }
    }

    pub fn box_grouping(&self) -> BoxGrouping {
        if self.merge_boxes {
            BoxGrouping::MergedPerClass
        } else {
            BoxGrouping::Component
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let cfg = ExperimentConfig::from_text("seed = 5 # comment\npooling=mean\nanchor_scales = 8, 16\n").unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.pooling, PoolingMode::Mean);
        assert_eq!(cfg.anchor_scales, vec![8.0, 16.0]);
        assert_eq!(ExperimentConfig::from_text(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert!(ExperimentConfig::from_text("colour = red").is_err());
        assert!(ExperimentConfig::from_text("rho = 1.5").is_err());
        assert!(ExperimentConfig::from_text("views = x").is_err());
        assert!(ExperimentConfig::from_text("views").is_err());
    }
}
