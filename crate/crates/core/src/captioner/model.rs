use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::vocab::{TokenSequence, BOS, EOS, PAD};
use crate::aggregate::ShapeFeature;
use crate::error::{Error, Result};
use crate::nn::checkpoint::config_get;
use crate::nn::{softmax, Checkpoint, GruCell, GruStep, Linear, Parameters, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptionerConfig {
    /// Vocabulary size `W`, reserved tokens included.
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Leave absent classes out of the encoder sequence instead of feeding
    /// their zero vector.
    pub skip_absent: bool,
}

impl CaptionerConfig {
    pub fn new(vocab_size: usize, num_classes: usize, feature_dim: usize) -> Self {
        Self {
            vocab_size,
            embed_dim: 64,
            hidden_dim: 32,
            num_classes,
            feature_dim,
            skip_absent: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size <= EOS + 1 {
            return Err(Error::Config(format!("vocabulary of {} has no words", self.vocab_size)));
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.num_classes == 0 || self.feature_dim == 0 {
            return Err(Error::Config("captioner dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// GRU encoder over the per-class features and GRU decoder over words.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionerModel {
    pub config: CaptionerConfig,
    /// `[W, E]`
    pub embedding: Tensor,
    /// Input is a class feature followed by its presence bit.
    pub encoder: GruCell,
    pub decoder: GruCell,
    pub projection: Linear,
}

impl Parameters for CaptionerModel {
    fn visit(&self, f: &mut dyn FnMut(&str, &Tensor)) {
        f("embedding", &self.embedding);
        self.encoder.visit("encoder", f);
        self.decoder.visit("decoder", f);
        f("projection.weight", &self.projection.weight);
        f("projection.bias", &self.projection.bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor)) {
        f("embedding", &mut self.embedding);
        self.encoder.visit_mut("encoder", f);
        self.decoder.visit_mut("decoder", f);
        f("projection.weight", &mut self.projection.weight);
        f("projection.bias", &mut self.projection.bias);
    }
}

impl CaptionerModel {
    pub fn new(config: CaptionerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = Tensor::uniform(&[config.vocab_size, config.embed_dim], 0.1, &mut rng);
        let encoder = GruCell::new(config.feature_dim + 1, config.hidden_dim, &mut rng);
        let decoder = GruCell::new(config.embed_dim, config.hidden_dim, &mut rng);
        let projection = Linear::new(config.hidden_dim, config.vocab_size, &mut rng);
        Ok(Self {
            config,
            embedding,
            encoder,
            decoder,
            projection,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config,
            embedding: self.embedding.zeros_like(),
            encoder: self.encoder.zeros_like(),
            decoder: self.decoder.zeros_like(),
            projection: self.projection.zeros_like(),
        }
    }

    fn embed(&self, token: usize) -> &[f64] {
        let e = self.config.embed_dim;
        &self.embedding.data[token * e..(token + 1) * e]
    }

    fn check_feature(&self, f: &ShapeFeature) -> Result<()> {
        if f.num_classes() != self.config.num_classes || f.present.len() != self.config.num_classes {
            return Err(Error::DimensionMismatch {
                expected: self.config.num_classes,
                actual: f.num_classes(),
                context: "shape feature classes",
            });
        }
        if let Some(v) = f.per_class.iter().find(|v| v.len() != self.config.feature_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.config.feature_dim,
                actual: v.len(),
                context: "shape feature length",
            });
        }
        Ok(())
    }

    fn encode_steps(&self, f: &ShapeFeature) -> Result<Vec<GruStep>> {
        self.check_feature(f)?;
        let mut h = vec![0.0; self.config.hidden_dim];
        let mut steps = Vec::with_capacity(f.num_classes());
        for (v, &present) in f.per_class.iter().zip(&f.present) {
            if self.config.skip_absent && !present {
                continue;
            }
            let mut x = v.clone();
            x.push(if present { 1.0 } else { 0.0 });
            let s = self.encoder.step(&x, &h);
            h = s.out.clone();
            steps.push(s);
        }
        Ok(steps)
    }

    /// Final encoder hidden state after consuming the classes in order.
    pub fn encode(&self, f: &ShapeFeature) -> Result<Vec<f64>> {
        let steps = self.encode_steps(f)?;
        Ok(steps
            .last()
            .map_or_else(|| vec![0.0; self.config.hidden_dim], |s| s.out.clone()))
    }

    fn check_sequence(&self, gt: &TokenSequence) -> Result<()> {
        match gt.ids().iter().find(|&&t| t >= self.config.vocab_size) {
            Some(&t) => Err(Error::InvalidArgument(format!(
                "token {t} outside a vocabulary of {}",
                self.config.vocab_size
            ))),
            None => Ok(()),
        }
    }

    /// Teacher-forced negative log-likelihood of every word and the final
    /// `EOS`.
    pub fn caption_loss(&self, f: &ShapeFeature, gt: &TokenSequence) -> Result<f64> {
        self.check_sequence(gt)?;
        let mut h = self.encode(f)?;
        let ids = gt.ids();
        let mut loss = 0.0;
        for n in 0..ids.len() - 1 {
            h = self.decoder.forward(self.embed(ids[n]), &h);
            let p = softmax(&self.projection.forward(&h));
            loss -= p[ids[n + 1]].max(f64::MIN_POSITIVE).ln();
        }
        Ok(loss)
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, f: &ShapeFeature, gt: &TokenSequence) -> Result<(f64, CaptionerModel)> {
        let mut grad = self.zeros_like();
        let loss = self.accumulate_grad(f, gt, 1.0, &mut grad)?;
        Ok((loss, grad))
    }

    /// Adds `weight ×` the loss gradient into `grad`; returns `weight ×` loss.
    pub fn accumulate_grad(
        &self,
        f: &ShapeFeature,
        gt: &TokenSequence,
        weight: f64,
        grad: &mut CaptionerModel,
    ) -> Result<f64> {
        self.check_sequence(gt)?;
        let enc = self.encode_steps(f)?;
        let h0 = enc
            .last()
            .map_or_else(|| vec![0.0; self.config.hidden_dim], |s| s.out.clone());
        let ids = gt.ids();
        let mut steps = Vec::with_capacity(ids.len() - 1);
        let mut probs = Vec::with_capacity(ids.len() - 1);
        let mut h = h0;
        let mut loss = 0.0;
        for n in 0..ids.len() - 1 {
            let s = self.decoder.step(self.embed(ids[n]), &h);
            h = s.out.clone();
            let p = softmax(&self.projection.forward(&h));
            loss -= p[ids[n + 1]].max(f64::MIN_POSITIVE).ln();
            steps.push(s);
            probs.push(p);
        }
        let e = self.config.embed_dim;
        let mut dh_next = vec![0.0; self.config.hidden_dim];
        for n in (0..steps.len()).rev() {
            let mut dlogits = std::mem::take(&mut probs[n]);
            dlogits[ids[n + 1]] -= 1.0;
            dlogits.iter_mut().for_each(|g| *g *= weight);
            let mut dh = self.projection.backward(&steps[n].out, &dlogits, &mut grad.projection);
            for (a, b) in dh.iter_mut().zip(&dh_next) {
                *a += b;
            }
            let (dx, dprev) = self.decoder.backward(&steps[n], &dh, &mut grad.decoder);
            let row = &mut grad.embedding.data[ids[n] * e..(ids[n] + 1) * e];
            for (a, b) in row.iter_mut().zip(&dx) {
                *a += b;
            }
            dh_next = dprev;
        }
        for s in enc.iter().rev() {
            let (_, dprev) = self.encoder.backward(s, &dh_next, &mut grad.encoder);
            dh_next = dprev;
        }
        Ok(weight * loss)
    }

    /// Greedy decoding from `BOS` until `EOS` or `max_len` words. `PAD` and
    /// `BOS` are never emitted.
    pub fn generate_caption(&self, f: &ShapeFeature, max_len: usize) -> Result<TokenSequence> {
        let mut h = self.encode(f)?;
        let mut prev = BOS;
        let mut words = Vec::new();
        while words.len() < max_len {
            h = self.decoder.forward(self.embed(prev), &h);
            let logits = self.projection.forward(&h);
            let mut best = EOS;
            for (i, &l) in logits.iter().enumerate() {
                if i != PAD && i != BOS && l > logits[best] {
                    best = i;
                }
            }
            if best == EOS {
                break;
            }
            words.push(best);
            prev = best;
        }
        TokenSequence::from_words(&words, self.config.vocab_size)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = &self.config;
        let config = vec![
            ("kind".to_string(), "captioner".to_string()),
            ("vocab_size".into(), c.vocab_size.to_string()),
            ("embed_dim".into(), c.embed_dim.to_string()),
            ("hidden_dim".into(), c.hidden_dim.to_string()),
            ("num_classes".into(), c.num_classes.to_string()),
            ("feature_dim".into(), c.feature_dim.to_string()),
            ("skip_absent".into(), c.skip_absent.to_string()),
        ];
        Checkpoint::from_parameters(config, self)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.config_value("kind") != Some("captioner") {
            return Err(Error::Format("checkpoint is not a captioner".into()));
        }
        let config = CaptionerConfig {
            vocab_size: config_get(ck, "vocab_size")?,
            embed_dim: config_get(ck, "embed_dim")?,
            hidden_dim: config_get(ck, "hidden_dim")?,
            num_classes: config_get(ck, "num_classes")?,
            feature_dim: config_get(ck, "feature_dim")?,
            skip_absent: config_get(ck, "skip_absent")?,
        };
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_projection_gives_log_w_per_token() {
        let cfg = CaptionerConfig::new(9, 2, 3);
        let mut m = CaptionerModel::new(cfg, 1).unwrap();
        m.projection.weight.fill(0.0);
        m.projection.bias.fill(0.0);
        let f = ShapeFeature::empty(2, 3);
        let seq = TokenSequence::from_words(&[4, 5, 6], 9).unwrap();
        let loss = m.caption_loss(&f, &seq).unwrap();
        assert!((loss - 4.0 * 9f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn eos_bias_gives_empty_caption() {
        let mut m = CaptionerModel::new(CaptionerConfig::new(7, 2, 3), 2).unwrap();
        m.projection.weight.fill(0.0);
        m.projection.bias.fill(0.0);
        m.projection.bias.data[EOS] = 5.0;
        let out = m.generate_caption(&ShapeFeature::empty(2, 3), 10).unwrap();
        assert!(out.is_empty());
    }
}
