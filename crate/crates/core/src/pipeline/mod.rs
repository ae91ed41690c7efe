//! Experiment orchestration: synthetic data, a stage runner with on-disk
//! manifests, and the experiment config.

mod config;
mod stages;
mod synth;

pub use config::{EvalSplit, ExperimentConfig};
pub use stages::{Manifest, Pipeline, ShapeRecord, ShapeRole, Stage, StageOutcome};
pub use synth::{generate_synthetic_dataset, ShapeCategory, SyntheticShape, TESSELLATION};
