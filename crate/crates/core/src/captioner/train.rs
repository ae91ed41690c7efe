use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{CaptionerConfig, CaptionerModel};
use super::vocab::TokenSequence;
use crate::aggregate::ShapeFeature;
use crate::error::{Error, Result};
use crate::nn::{Optimizer, OptimizerConfig, Parameters, TrainLog};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptionerTrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Default for CaptionerTrainConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            batch_size: 4,
            optimizer: OptimizerConfig::default(),
            seed: 0,
        }
    }
}

/// Trains a fresh captioner by mini-batch descent on the mean caption loss.
/// Batches walk a reshuffled pass over the dataset.
pub fn train_captioner(
    dataset: &[(ShapeFeature, TokenSequence)],
    model_cfg: CaptionerConfig,
    tc: &CaptionerTrainConfig,
) -> Result<(CaptionerModel, TrainLog)> {
    if dataset.is_empty() {
        return Err(Error::Training("empty captioning dataset".into()));
    }
    let mut model = CaptionerModel::new(model_cfg, tc.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x5eed);
    let mut opt = Optimizer::new(tc.optimizer);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut cursor = order.len();
    let batch = tc.batch_size.clamp(1, dataset.len());
    let mut log = TrainLog::default();
    for step in 0..tc.steps {
        let mut grad = model.zeros_like();
        let mut loss = 0.0;
        for _ in 0..batch {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let (f, seq) = &dataset[order[cursor]];
            cursor += 1;
            loss += model.accumulate_grad(f, seq, 1.0 / batch as f64, &mut grad)?;
        }
        opt.step(&mut model, &grad);
        if !loss.is_finite() || !model.all_finite() {
            return Err(Error::Training(format!(
                "captioner diverged at step {step} (loss {loss}); lower the learning rate"
            )));
        }
        log.losses.push(loss);
    }
    Ok((model, log))
}
