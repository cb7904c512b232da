//! Knowledge tracing with a last-query transformer encoder, an LSTM and a
//! small DNN head.
//!
//! Only the final position of each input window is used as the attention
//! query, so attention scores cost `O(L)` rather than `O(L²)`.

pub mod datagen;
pub mod error;
pub mod features;
pub mod gradcheck;
pub mod model;
pub mod numcore;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = numcore::Matrix<f64>;
pub type Matrix32 = numcore::Matrix<f32>;
pub type Model64 = model::LastQueryModel<f64>;
pub type Model32 = model::LastQueryModel<f32>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type ModelParams32 = model::ModelParams<f32>;
