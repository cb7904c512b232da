//! Dense matrices, differentiable primitives, initialization, RNG and Adam.

mod adam;
pub mod init;
mod matrix;
pub mod ops;
mod param;
mod rng;

pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use matrix::Matrix;
pub(crate) use matrix::axpy;
pub use ops::{
    broadcast_add_row, layernorm, layernorm_backward, layernorm_forward, masked_row_softmax,
    masked_row_softmax_backward, matmul_backward, relu, sigmoid, tanh, LayerNormCache,
};
pub use param::{Param, Parameters};
pub use rng::Rng;
