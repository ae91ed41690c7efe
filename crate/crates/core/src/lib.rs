pub mod aggregate;
pub mod annotate;
pub mod bbox;
pub mod captioner;
pub mod detector;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod render;

pub use error::{Error, Result};
