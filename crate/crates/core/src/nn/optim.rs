use std::fmt;
use std::str::FromStr;

use super::tensor::Parameters;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    /// Gradient descent, optionally with heavy-ball momentum.
    Sgd,
    Adam,
}

impl FromStr for OptimizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            other => Err(Error::Config(format!("unknown optimizer `{other}` (sgd|adam)"))),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::Sgd => "sgd",
            Self::Adam => "adam",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// Momentum for SGD; 0 is plain gradient descent.
    pub momentum: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip_norm: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            learning_rate: 1e-5,
            momentum: 0.0,
            clip_norm: 0.0,
        }
    }
}

/// Loss recorded at every optimizer step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub losses: Vec<f64>,
}

impl TrainLog {
    /// Mean of the first `n` recorded losses.
    pub fn head_mean(&self, n: usize) -> f64 {
        let k = n.min(self.losses.len()).max(1);
        self.losses.iter().take(k).sum::<f64>() / k as f64
    }

    /// Mean of the last `n` recorded losses.
    pub fn tail_mean(&self, n: usize) -> f64 {
        let k = n.min(self.losses.len()).max(1);
        self.losses.iter().rev().take(k).sum::<f64>() / k as f64
    }
}

/// Optimizer state; slots follow the parameters' visit order.
#[derive(Debug, Clone)]
pub struct Optimizer {
    cfg: OptimizerConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    t: u64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Optimizer {
    pub fn new(cfg: OptimizerConfig) -> Self {
        Self {
            cfg,
            first: Vec::new(),
            second: Vec::new(),
            t: 0,
        }
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) {
        let mut gs: Vec<Vec<f64>> = Vec::new();
        grads.visit(&mut |_, t| gs.push(t.data.clone()));
        if self.first.is_empty() {
            self.first = gs.iter().map(|g| vec![0.0; g.len()]).collect();
            self.second = self.first.clone();
        }
        let mut scale = 1.0;
        if self.cfg.clip_norm > 0.0 {
            let norm = gs.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
            if norm > self.cfg.clip_norm {
                scale = self.cfg.clip_norm / norm;
            }
        }
        self.t += 1;
        let cfg = self.cfg;
        let t = self.t as i32;
        let mut slot = 0;
        let (first, second) = (&mut self.first, &mut self.second);
        params.visit_mut(&mut |_, p| {
            let g = &gs[slot];
            let m = &mut first[slot];
            match cfg.kind {
                OptimizerKind::Sgd => {
                    for i in 0..p.data.len() {
                        let gi = g[i] * scale;
                        if cfg.momentum > 0.0 {
                            m[i] = cfg.momentum * m[i] + gi;
                            p.data[i] -= cfg.learning_rate * m[i];
                        } else {
                            p.data[i] -= cfg.learning_rate * gi;
                        }
                    }
                }
                OptimizerKind::Adam => {
                    let v = &mut second[slot];
                    let c1 = 1.0 - BETA1.powi(t);
                    let c2 = 1.0 - BETA2.powi(t);
                    for i in 0..p.data.len() {
                        let gi = g[i] * scale;
                        m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
                        v[i] = BETA2 * v[i] + (1.0 - BETA2) * gi * gi;
                        p.data[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
                    }
                }
            }
            slot += 1;
        });
    }
}
