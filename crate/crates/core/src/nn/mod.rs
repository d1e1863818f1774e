//! Small dense networks with hand-written reverse-mode gradients.

pub mod checkpoint;
mod gaussian;
mod matrix;
mod mlp;
mod optim;

pub use gaussian::{
    backprop_sample, sample_reparameterized, sample_with_noise, GaussianHead, GaussianSample, LOG_STD_MAX, LOG_STD_MIN,
    TANH_EPS,
};
pub use matrix::Matrix;
pub use mlp::{param_count, weight_count, Mlp, Tape};
pub use optim::{soft_update, Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
