//! Single post-layernorm encoder block around last-query attention.
//!
//! The 1×d attention context is added to every input row, so the block
//! still emits an L×d sequence for the LSTM while attention stays `O(L)`:
//!
//! ```text
//! c   = last_query_attention(x)
//! h   = layernorm1(x + c)
//! out = layernorm2(h + ffn(h))
//! ```

use super::attention::{last_query_attention, last_query_attention_backward, AttentionCache, AttentionParams};
use crate::error::Result;
use crate::numcore::{init, ops, LayerNormCache, Matrix, Param, Parameters, Rng};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams<T> {
    pub attn: AttentionParams<T>,
    pub ln1_gamma: Param<T>,
    pub ln1_beta: Param<T>,
    pub ffn_w1: Param<T>,
    pub ffn_b1: Param<T>,
    pub ffn_w2: Param<T>,
    pub ffn_b2: Param<T>,
    pub ln2_gamma: Param<T>,
    pub ln2_beta: Param<T>,
}

impl<T: Scalar> EncoderParams<T> {
    pub fn new(d: usize, d_ff: usize, rng: &mut Rng) -> Self {
        Self {
            attn: AttentionParams::new(d, rng),
            ln1_gamma: Param::new("encoder.ln1.gamma", init::ones(1, d)),
            ln1_beta: Param::new("encoder.ln1.beta", init::zeros(1, d)),
            ffn_w1: Param::new("encoder.ffn.w1", init::xavier_uniform(d, d_ff, rng)),
            ffn_b1: Param::new("encoder.ffn.b1", init::zeros(1, d_ff)),
            ffn_w2: Param::new("encoder.ffn.w2", init::xavier_uniform(d_ff, d, rng)),
            ffn_b2: Param::new("encoder.ffn.b2", init::zeros(1, d)),
            ln2_gamma: Param::new("encoder.ln2.gamma", init::ones(1, d)),
            ln2_beta: Param::new("encoder.ln2.beta", init::zeros(1, d)),
        }
    }
}

impl<T: Scalar> Parameters<T> for EncoderParams<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut v = self.attn.params();
        v.extend([
            &self.ln1_gamma,
            &self.ln1_beta,
            &self.ffn_w1,
            &self.ffn_b1,
            &self.ffn_w2,
            &self.ffn_b2,
            &self.ln2_gamma,
            &self.ln2_beta,
        ]);
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = self.attn.params_mut();
        v.extend([
            &mut self.ln1_gamma,
            &mut self.ln1_beta,
            &mut self.ffn_w1,
            &mut self.ffn_b1,
            &mut self.ffn_w2,
            &mut self.ffn_b2,
            &mut self.ln2_gamma,
            &mut self.ln2_beta,
        ]);
        v
    }
}

#[derive(Clone, Debug)]
pub struct EncoderCache<T> {
    attn: AttentionCache<T>,
    ln1: LayerNormCache<T>,
    h: Matrix<T>,
    ffn_pre: Matrix<T>,
    ffn_act: Matrix<T>,
    ln2: LayerNormCache<T>,
    /// Score-stage multiply-accumulates of the attention call.
    pub score_macs: u64,
}

pub fn encoder_block<T: Scalar>(
    x: &Matrix<T>,
    pad_mask: &[bool],
    p: &EncoderParams<T>,
    n_heads: usize,
) -> Result<Matrix<T>> {
    encoder_forward(x, pad_mask, p, n_heads).map(|(y, _)| y)
}

pub fn encoder_forward<T: Scalar>(
    x: &Matrix<T>,
    pad_mask: &[bool],
    p: &EncoderParams<T>,
    n_heads: usize,
) -> Result<(Matrix<T>, EncoderCache<T>)> {
    let attn = last_query_attention(x, pad_mask, &p.attn, n_heads)?;
    let s = ops::broadcast_add_row(x, &attn.context)?;
    let (h, ln1) = ops::layernorm_forward(&s, &p.ln1_gamma.value, &p.ln1_beta.value)?;
    let ffn_pre = ops::broadcast_add_row(&h.matmul(&p.ffn_w1.value)?, &p.ffn_b1.value)?;
    let ffn_act = ops::relu_m(&ffn_pre);
    let ffn_out = ops::broadcast_add_row(&ffn_act.matmul(&p.ffn_w2.value)?, &p.ffn_b2.value)?;
    let r = h.add(&ffn_out)?;
    let (out, ln2) = ops::layernorm_forward(&r, &p.ln2_gamma.value, &p.ln2_beta.value)?;
    Ok((
        out,
        EncoderCache {
            score_macs: attn.score_macs,
            attn: attn.cache,
            ln1,
            h,
            ffn_pre,
            ffn_act,
            ln2,
        },
    ))
}

/// Accumulates parameter gradients and returns `dx`.
pub fn encoder_backward<T: Scalar>(
    cache: &EncoderCache<T>,
    p: &mut EncoderParams<T>,
    dout: &Matrix<T>,
) -> Result<Matrix<T>> {
    let (dr, dg2, db2) = ops::layernorm_backward(&cache.ln2, &p.ln2_gamma.value, dout);
    p.ln2_gamma.accumulate(&dg2);
    p.ln2_beta.accumulate(&db2);

    cache.ffn_act.matmul_at_acc(&dr, &mut p.ffn_w2.grad)?;
    p.ffn_b2.accumulate(&dr.column_sums());
    let dact = dr.matmul_bt(&p.ffn_w2.value)?;
    let dpre = ops::relu_backward(&cache.ffn_pre, &dact);
    cache.h.matmul_at_acc(&dpre, &mut p.ffn_w1.grad)?;
    p.ffn_b1.accumulate(&dpre.column_sums());
    let mut dh = dr;
    dh += &dpre.matmul_bt(&p.ffn_w1.value)?;

    let (ds, dg1, db1) = ops::layernorm_backward(&cache.ln1, &p.ln1_gamma.value, &dh);
    p.ln1_gamma.accumulate(&dg1);
    p.ln1_beta.accumulate(&db1);

    let (mut dx, dcontext) = ops::broadcast_add_row_backward(&ds);
    dx += &last_query_attention_backward(&cache.attn, &mut p.attn, &dcontext)?;
    Ok(dx)
}
