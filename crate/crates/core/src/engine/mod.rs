//! Deterministic dense neural-network engine: masked linear layers, leaky
//! ReLU, dropout, softmax cross-entropy, Adam and the step LR schedule.

mod layer;
mod matrix;
mod ops;
mod optim;
mod scalar;
pub mod stack;
mod train;

pub use layer::{linear_backward, linear_forward, LayerGrad, LinearBackward, LinearLayer};
pub use matrix::{dot, Matrix};
pub use ops::{
    dropout, leaky_relu, leaky_relu_backward, softmax, softmax_cross_entropy, DEFAULT_LEAKY_SLOPE,
};
pub use optim::{adam_step, lr_at_epoch, AdamState, TrainConfig};
pub use scalar::Scalar;
pub use train::{batch_grads, train, train_with, BatchGrads, Dataset, StepOptions, Trainer};
