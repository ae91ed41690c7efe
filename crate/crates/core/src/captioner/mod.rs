//! Sequence-to-sequence captioning from per-class shape features: a GRU
//! encoder reads one class feature per step, a GRU decoder emits words.

mod model;
mod train;
mod vocab;

pub use model::{CaptionerConfig, CaptionerModel};
pub use train::{train_captioner, CaptionerTrainConfig};
pub use vocab::{tokenize, TokenSequence, Vocabulary, BOS, EOS, PAD, UNK};
