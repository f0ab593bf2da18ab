//! Minimal differentiable kernels: conv1d, dense, ReLU, max-pool,
//! batchnorm, LSTM, softmax and residual blocks over a static tape, Adam,
//! early-stopped training and masked evaluation.

pub mod checkpoint;
mod kernels;
pub mod layers;
mod masked;
pub mod model;
pub mod optim;
pub mod scalar;
pub mod train;

pub use layers::{LayerSpec, Shape};
pub use masked::argmax;
pub use model::{BnBatchStats, LossGrad, Model, ModelParams, ParamKey, Tensor, TensorStore, LOG_CLIP};
pub use optim::{adam_step, AdamState};
pub use scalar::Scalar;
pub use train::{loss_and_accuracy, train, Examples, History, TrainConfig, Trained, BN_MOMENTUM};
