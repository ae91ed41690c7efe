use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{detector_loss_from_logits, smooth_l1_grad};
use super::proposals::DEFAULT_ASPECTS;
use super::roi::{roi_pool, roi_pool_backward, RoiLayout, RoiTaps};
use crate::bbox::BBox;
use crate::error::{Error, Result};
use crate::nn::checkpoint::config_get;
use crate::nn::{
    softmax, tanh_backward, tanh_inplace, Checkpoint, Conv2d, FeatureMap, Linear, Parameters, Tensor,
};
use crate::render::ViewImage;

/// Pixels per backbone feature cell (two stride-2 convolutions).
pub const FEATURE_STRIDE: usize = 4;

/// Smallest box area accepted for feature pooling.
pub const MIN_BOX_AREA: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// Part classes `C`; the classifier has `C + 1` outputs, background last.
    pub num_classes: usize,
    pub image_size: usize,
    pub conv1_channels: usize,
    pub conv2_channels: usize,
    /// Length `D` of the per-part feature.
    pub feature_dim: usize,
    pub inner_bins: usize,
    pub context_bins: usize,
    pub context_scale: f64,
    pub anchor_stride: usize,
    pub anchor_scales: Vec<f64>,
    /// Anchor height-to-width ratios.
    pub anchor_aspects: Vec<f64>,
    /// Anchors covering less than this foreground fraction are not scored.
    pub min_foreground: f64,
    /// Extra rounds of re-scoring a box after applying its offsets.
    pub refine_steps: usize,
}

impl DetectorConfig {
    pub fn new(num_classes: usize, image_size: usize) -> Self {
        Self {
            num_classes,
            image_size,
            conv1_channels: 8,
            conv2_channels: 16,
            feature_dim: 256,
            inner_bins: 3,
            context_bins: 2,
            context_scale: 2.0,
            anchor_stride: 8,
            anchor_scales: vec![16.0, 32.0, 64.0],
            anchor_aspects: DEFAULT_ASPECTS.to_vec(),
            min_foreground: 0.1,
            refine_steps: 0,
        }
    }

    pub fn layout(&self) -> RoiLayout {
        RoiLayout {
            inner_bins: self.inner_bins,
            context_bins: self.context_bins,
            context_scale: self.context_scale,
            stride: FEATURE_STRIDE,
        }
    }

    pub fn pooled_dim(&self) -> usize {
        self.conv2_channels * self.layout().bins()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.feature_dim == 0 || self.conv1_channels == 0 || self.conv2_channels == 0 {
            return Err(Error::Config("detector dimensions must be positive".into()));
        }
        if self.image_size < 16
            || self.inner_bins == 0
            || self.anchor_stride == 0
            || self.anchor_scales.is_empty()
            || self.anchor_aspects.is_empty()
            || self.anchor_scales.iter().chain(&self.anchor_aspects).any(|&v| !(v > 0.0))
        {
            return Err(Error::Config("invalid detector geometry".into()));
        }
        Ok(())
    }

    fn to_entries(&self) -> Vec<(String, String)> {
        let join = |v: &[f64]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("kind".into(), "detector".into()),
            ("num_classes".into(), self.num_classes.to_string()),
            ("image_size".into(), self.image_size.to_string()),
            ("conv1_channels".into(), self.conv1_channels.to_string()),
            ("conv2_channels".into(), self.conv2_channels.to_string()),
            ("feature_dim".into(), self.feature_dim.to_string()),
            ("inner_bins".into(), self.inner_bins.to_string()),
            ("context_bins".into(), self.context_bins.to_string()),
            ("context_scale".into(), self.context_scale.to_string()),
            ("anchor_stride".into(), self.anchor_stride.to_string()),
            ("anchor_scales".into(), join(&self.anchor_scales)),
            ("anchor_aspects".into(), join(&self.anchor_aspects)),
            ("min_foreground".into(), self.min_foreground.to_string()),
            ("refine_steps".into(), self.refine_steps.to_string()),
        ]
    }

    fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.config_value("kind") != Some("detector") {
            return Err(Error::Format("checkpoint is not a detector".into()));
        }
        Ok(Self {
            num_classes: config_get(ck, "num_classes")?,
            image_size: config_get(ck, "image_size")?,
            conv1_channels: config_get(ck, "conv1_channels")?,
            conv2_channels: config_get(ck, "conv2_channels")?,
            feature_dim: config_get(ck, "feature_dim")?,
            inner_bins: config_get(ck, "inner_bins")?,
            context_bins: config_get(ck, "context_bins")?,
            context_scale: config_get(ck, "context_scale")?,
            anchor_stride: config_get(ck, "anchor_stride")?,
            anchor_scales: parse_list(&config_get::<String>(ck, "anchor_scales")?)?,
            anchor_aspects: parse_list(&config_get::<String>(ck, "anchor_aspects")?)?,
            min_foreground: config_get(ck, "min_foreground")?,
            refine_steps: config_get(ck, "refine_steps")?,
        })
    }
}

pub(crate) fn parse_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Format(format!("bad number `{s}` in list"))))
        .collect()
}

/// Two-layer convolutional backbone, pooled box descriptor, a shared
/// penultimate layer producing the part feature, and classification and
/// box-offset heads.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub config: DetectorConfig,
    pub conv1: Conv2d,
    pub conv2: Conv2d,
    pub fc: Linear,
    pub cls: Linear,
    pub reg: Linear,
}

impl Parameters for DetectorModel {
    fn visit(&self, f: &mut dyn FnMut(&str, &Tensor)) {
        f("conv1.weight", &self.conv1.weight);
        f("conv1.bias", &self.conv1.bias);
        f("conv2.weight", &self.conv2.weight);
        f("conv2.bias", &self.conv2.bias);
        f("fc.weight", &self.fc.weight);
        f("fc.bias", &self.fc.bias);
        f("cls.weight", &self.cls.weight);
        f("cls.bias", &self.cls.bias);
        f("reg.weight", &self.reg.weight);
        f("reg.bias", &self.reg.bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor)) {
        f("conv1.weight", &mut self.conv1.weight);
        f("conv1.bias", &mut self.conv1.bias);
        f("conv2.weight", &mut self.conv2.weight);
        f("conv2.bias", &mut self.conv2.bias);
        f("fc.weight", &mut self.fc.weight);
        f("fc.bias", &mut self.fc.bias);
        f("cls.weight", &mut self.cls.weight);
        f("cls.bias", &mut self.cls.bias);
        f("reg.weight", &mut self.reg.weight);
        f("reg.bias", &mut self.reg.bias);
    }
}

/// Backbone activations of one view.
#[derive(Debug, Clone)]
pub struct Backbone {
    input: FeatureMap,
    act1: FeatureMap,
    pub features: FeatureMap,
}

/// Head outputs for one box.
#[derive(Debug, Clone)]
pub struct HeadOutput {
    pub pooled: Vec<f64>,
    /// Penultimate activation: the part feature.
    pub feature: Vec<f64>,
    pub logits: Vec<f64>,
    pub offsets: [f64; 4],
}

/// Training target for one box.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiTarget {
    pub bbox: BBox,
    /// Class index, or `num_classes` for background.
    pub class: usize,
    /// Regression target; `None` for background boxes.
    pub offsets: Option<[f64; 4]>,
}

impl DetectorModel {
    pub fn new(config: DetectorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conv1 = Conv2d::new(3, config.conv1_channels, 2, &mut rng);
        let conv2 = Conv2d::new(config.conv1_channels, config.conv2_channels, 2, &mut rng);
        let fc = Linear::new(config.pooled_dim(), config.feature_dim, &mut rng);
        let cls = Linear::new(config.feature_dim, config.num_classes + 1, &mut rng);
        let mut reg = Linear::new(config.feature_dim, 4, &mut rng);
        reg.weight.scale(0.1);
        Ok(Self {
            config,
            conv1,
            conv2,
            fc,
            cls,
            reg,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            conv1: self.conv1.zeros_like(),
            conv2: self.conv2.zeros_like(),
            fc: self.fc.zeros_like(),
            cls: self.cls.zeros_like(),
            reg: self.reg.zeros_like(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim
    }

    pub fn backbone(&self, view: &ViewImage) -> Backbone {
        let (w, h) = (view.width, view.height);
        let mut input = FeatureMap::zeros(3, h, w);
        for (i, p) in view.pixels.iter().enumerate() {
            for c in 0..3 {
                input.data[c * w * h + i] = p[c] as f64 / 255.0 - 0.5;
            }
        }
        let mut act1 = self.conv1.forward(&input);
        tanh_inplace(&mut act1.data);
        let mut features = self.conv2.forward(&act1);
        tanh_inplace(&mut features.data);
        Backbone {
            input,
            act1,
            features,
        }
    }

    pub fn taps(&self, bb: &Backbone, b: &BBox) -> RoiTaps {
        self.config.layout().taps(b, bb.features.height, bb.features.width)
    }

    pub fn head(&self, bb: &Backbone, b: &BBox) -> HeadOutput {
        let taps = self.taps(bb, b);
        self.head_from_taps(bb, &taps)
    }

    fn head_from_taps(&self, bb: &Backbone, taps: &RoiTaps) -> HeadOutput {
        let pooled = roi_pool(&bb.features, taps);
        let mut feature = self.fc.forward(&pooled);
        tanh_inplace(&mut feature);
        let logits = self.cls.forward(&feature);
        let r = self.reg.forward(&feature);
        HeadOutput {
            pooled,
            feature,
            logits,
            offsets: [r[0], r[1], r[2], r[3]],
        }
    }

    /// Class probabilities over `C + 1` outputs, background last.
    pub fn class_probs(&self, out: &HeadOutput) -> Vec<f64> {
        softmax(&out.logits)
    }

    /// Mean detector loss over `rois` on one view.
    pub fn loss(&self, view: &ViewImage, rois: &[RoiTarget], lambda: f64) -> f64 {
        let bb = self.backbone(view);
        let total: f64 = rois
            .iter()
            .map(|t| {
                let out = self.head(&bb, &t.bbox);
                detector_loss_from_logits(&out.logits, &out.offsets, t.class, t.offsets.as_ref(), lambda).0
            })
            .sum();
        total / rois.len().max(1) as f64
    }

    /// Mean loss over `rois` and its gradient with respect to every
    /// parameter.
    pub fn loss_and_grad(&self, view: &ViewImage, rois: &[RoiTarget], lambda: f64) -> (f64, DetectorModel) {
        let mut grad = self.zeros_like();
        let loss = self.accumulate_grad(view, rois, lambda, 1.0 / rois.len().max(1) as f64, &mut grad);
        (loss, grad)
    }

    /// Adds `weight ×` the gradient of the summed roi loss into `grad`;
    /// returns `weight ×` the summed loss.
    pub fn accumulate_grad(
        &self,
        view: &ViewImage,
        rois: &[RoiTarget],
        lambda: f64,
        weight: f64,
        grad: &mut DetectorModel,
    ) -> f64 {
        let bb = self.backbone(view);
        let fm = &bb.features;
        let mut dfm = FeatureMap::zeros(fm.channels, fm.height, fm.width);
        let mut total = 0.0;
        for t in rois {
            let taps = self.taps(&bb, &t.bbox);
            let out = self.head_from_taps(&bb, &taps);
            let (loss, dlogits) =
                detector_loss_from_logits(&out.logits, &out.offsets, t.class, t.offsets.as_ref(), lambda);
            total += weight * loss;
            let dlogits: Vec<f64> = dlogits.iter().map(|g| g * weight).collect();
            let mut dfeat = self.cls.backward(&out.feature, &dlogits, &mut grad.cls);
            if let Some(gt) = &t.offsets {
                let doff: Vec<f64> = (0..4)
                    .map(|i| weight * lambda * smooth_l1_grad(out.offsets[i] - gt[i]))
                    .collect();
                let d2 = self.reg.backward(&out.feature, &doff, &mut grad.reg);
                for (a, b) in dfeat.iter_mut().zip(d2) {
                    *a += b;
                }
            }
            let dpre = tanh_backward(&out.feature, &dfeat);
            let dpooled = self.fc.backward(&out.pooled, &dpre, &mut grad.fc);
            roi_pool_backward(&dpooled, &taps, &mut dfm);
        }
        let d2pre = FeatureMap {
            data: tanh_backward(&fm.data, &dfm.data),
            ..dfm
        };
        let dact1 = self
            .conv2
            .backward(&bb.act1, &d2pre, &mut grad.conv2, true)
            .expect("dx requested");
        let d1pre = FeatureMap {
            data: tanh_backward(&bb.act1.data, &dact1.data),
            ..dact1
        };
        self.conv1.backward(&bb.input, &d1pre, &mut grad.conv1, false);
        total
    }

    /// Part feature of `b` on `view`.
    pub fn region_features(&self, view: &ViewImage, b: &BBox) -> Result<Vec<f64>> {
        if !b.is_valid() || b.area() < MIN_BOX_AREA {
            return Err(Error::InvalidArgument(format!("degenerate box {b:?} (area < {MIN_BOX_AREA})")));
        }
        if !b.within(view.width, view.height) {
            return Err(Error::InvalidArgument(format!("box {b:?} outside the image")));
        }
        let bb = self.backbone(view);
        Ok(self.head(&bb, b).feature)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::from_parameters(self.config.to_entries(), self)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let config = DetectorConfig::from_checkpoint(ck)?;
        let mut model = Self::new(config, 0)?;
        ck.load_into(&mut model)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().write(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::read(path)?)
    }
}
