//! Minimal differentiable building blocks with hand-written backward
//! passes, plus optimizers and the checkpoint container.

pub mod checkpoint;
mod gru;
mod layers;
mod optim;
mod tensor;

pub use checkpoint::{Checkpoint, NamedTensor, TensorData};
pub use gru::{matvec, matvec_t, outer_acc, GruCell, GruStep};
pub use layers::{dot, log_softmax_at, sigmoid, softmax, tanh_backward, tanh_inplace, Conv2d, FeatureMap, Linear};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind, TrainLog};
pub use tensor::{Parameters, Tensor};
