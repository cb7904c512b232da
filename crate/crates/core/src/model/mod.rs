//! The last-query transformer + LSTM network and its pieces.

mod attention;
mod checkpoint;
mod config;
mod encoder;
mod flops;
mod head;
mod lstm;
mod network;

pub use attention::{
    full_attention_reference, last_query_attention, last_query_attention_backward, AttentionCache,
    AttentionOutput, AttentionParams, FullAttentionOutput,
};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use config::ModelConfig;
pub use encoder::{encoder_backward, encoder_block, encoder_forward, EncoderCache, EncoderParams};
pub use flops::{attention_flops, AttentionVariant};
pub use head::{head_backward, head_forward, HeadCache, HeadParams};
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmParams};
pub use network::{backward, forward, forward_logit, probability, ForwardCache, LastQueryModel, ModelParams};
