//! Multi-head attention where only the final position issues a query.
//!
//! The score stage is a length-L vector per head, never an L×L matrix, so it
//! costs `n_heads · L · d_k` multiply-accumulates. [`full_attention_reference`]
//! is the ordinary all-queries version kept as a test oracle and benchmark
//! baseline.

use crate::error::{Error, Result};
use crate::numcore::ops::{masked_softmax_into, softmax_backward_into};
use crate::numcore::{axpy, init, masked_row_softmax, Matrix, Param, Parameters, Rng};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams<T> {
    pub w_q: Param<T>,
    pub w_k: Param<T>,
    pub w_v: Param<T>,
    pub w_o: Param<T>,
}

impl<T: Scalar> AttentionParams<T> {
    pub fn new(d: usize, rng: &mut Rng) -> Self {
        Self {
            w_q: Param::new("encoder.attn.w_q", init::xavier_uniform(d, d, rng)),
            w_k: Param::new("encoder.attn.w_k", init::xavier_uniform(d, d, rng)),
            w_v: Param::new("encoder.attn.w_v", init::xavier_uniform(d, d, rng)),
            w_o: Param::new("encoder.attn.w_o", init::xavier_uniform(d, d, rng)),
        }
    }

    pub fn d(&self) -> usize {
        self.w_q.value.rows()
    }
}

impl<T: Scalar> Parameters<T> for AttentionParams<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.w_q, &self.w_k, &self.w_v, &self.w_o]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.w_q, &mut self.w_k, &mut self.w_v, &mut self.w_o]
    }
}

/// Result of [`last_query_attention`].
#[derive(Clone, Debug)]
pub struct AttentionOutput<T> {
    /// 1×d attention context for the final position.
    pub context: Matrix<T>,
    /// Multiply-accumulates performed while computing scores.
    pub score_macs: u64,
    pub cache: AttentionCache<T>,
}

#[derive(Clone, Debug)]
pub struct AttentionCache<T> {
    x: Matrix<T>,
    q: Matrix<T>,
    k: Matrix<T>,
    v: Matrix<T>,
    /// n_heads × L softmax weights.
    weights: Matrix<T>,
    concat: Matrix<T>,
    n_heads: usize,
}

impl<T> AttentionCache<T> {
    pub fn weights(&self) -> &Matrix<T> {
        &self.weights
    }
}

fn check_inputs<T: Scalar>(
    op: &'static str,
    x: &Matrix<T>,
    pad_mask: &[bool],
    p: &AttentionParams<T>,
    n_heads: usize,
) -> Result<usize> {
    let d = p.d();
    if x.cols() != d || x.rows() == 0 {
        return Err(Error::Dimension {
            op,
            lhs: x.shape(),
            rhs: p.w_q.shape(),
        });
    }
    if pad_mask.len() != x.rows() {
        return Err(Error::Dimension {
            op,
            lhs: x.shape(),
            rhs: (1, pad_mask.len()),
        });
    }
    if n_heads == 0 || !d.is_multiple_of(n_heads) {
        return Err(Error::Config(format!("d={d} is not divisible by n_heads={n_heads}")));
    }
    Ok(d / n_heads)
}

/// Attention context of the last row of `x` over all unmasked rows.
pub fn last_query_attention<T: Scalar>(
    x: &Matrix<T>,
    pad_mask: &[bool],
    p: &AttentionParams<T>,
    n_heads: usize,
) -> Result<AttentionOutput<T>> {
    let d_k = check_inputs("last_query_attention", x, pad_mask, p, n_heads)?;
    let len = x.rows();
    if pad_mask[len - 1] {
        return Err(Error::Contract("the query (last) position is padding".into()));
    }

    let q = Matrix::row_vector(x.row(len - 1).to_vec()).matmul(&p.w_q.value)?;
    let k = x.matmul(&p.w_k.value)?;
    let v = x.matmul(&p.w_v.value)?;
    let scale = T::one() / T::lit(d_k as f64).sqrt();

    let mut weights = Matrix::zeros(n_heads, len);
    let mut concat = Matrix::zeros(1, p.d());
    let mut scores = vec![T::zero(); len];
    let mut macs = 0u64;
    for h in 0..n_heads {
        let block = h * d_k..(h + 1) * d_k;
        let qh = &q.data()[block.clone()];
        for (j, s) in scores.iter_mut().enumerate() {
            let kj = &k.row(j)[block.clone()];
            let mut acc = T::zero();
            for t in 0..d_k {
                acc += qh[t] * kj[t];
                macs += 1;
            }
            *s = acc * scale;
        }
        masked_softmax_into(&scores, pad_mask, weights.row_mut(h));
        let out = &mut concat.data_mut()[block.clone()];
        for j in 0..len {
            let wj = weights[(h, j)];
            if wj != T::zero() {
                axpy(wj, &v.row(j)[block.clone()], out);
            }
        }
    }
    let context = concat.matmul(&p.w_o.value)?;
    Ok(AttentionOutput {
        context,
        score_macs: macs,
        cache: AttentionCache {
            x: x.clone(),
            q,
            k,
            v,
            weights,
            concat,
            n_heads,
        },
    })
}

/// Accumulates weight gradients and returns `dx` (L×d) given `dcontext` (1×d).
pub fn last_query_attention_backward<T: Scalar>(
    cache: &AttentionCache<T>,
    p: &mut AttentionParams<T>,
    dcontext: &Matrix<T>,
) -> Result<Matrix<T>> {
    let (len, d) = cache.x.shape();
    let n_heads = cache.n_heads;
    let d_k = d / n_heads;
    let scale = T::one() / T::lit(d_k as f64).sqrt();

    cache.concat.matmul_at_acc(dcontext, &mut p.w_o.grad)?;
    let dconcat = dcontext.matmul_bt(&p.w_o.value)?;

    let mut dq = Matrix::zeros(1, d);
    let mut dk = Matrix::zeros(len, d);
    let mut dv = Matrix::zeros(len, d);
    let mut dw = vec![T::zero(); len];
    let mut ds = vec![T::zero(); len];
    for h in 0..n_heads {
        let block = h * d_k..(h + 1) * d_k;
        let dch = &dconcat.data()[block.clone()];
        let wh = cache.weights.row(h);
        for j in 0..len {
            let vj = &cache.v.row(j)[block.clone()];
            dw[j] = dch.iter().zip(vj).map(|(&a, &b)| a * b).sum();
            if wh[j] != T::zero() {
                axpy(wh[j], dch, &mut dv.row_mut(j)[block.clone()]);
            }
        }
        softmax_backward_into(wh, &dw, &mut ds);
        let qh = cache.q.data()[block.clone()].to_vec();
        for j in 0..len {
            let g = ds[j] * scale;
            if g == T::zero() {
                continue;
            }
            axpy(g, &cache.k.row(j)[block.clone()], &mut dq.data_mut()[block.clone()]);
            axpy(g, &qh, &mut dk.row_mut(j)[block.clone()]);
        }
    }

    let x_last = Matrix::row_vector(cache.x.row(len - 1).to_vec());
    x_last.matmul_at_acc(&dq, &mut p.w_q.grad)?;
    cache.x.matmul_at_acc(&dk, &mut p.w_k.grad)?;
    cache.x.matmul_at_acc(&dv, &mut p.w_v.grad)?;

    let mut dx = dk.matmul_bt(&p.w_k.value)?;
    dx += &dv.matmul_bt(&p.w_v.value)?;
    let dx_last = dq.matmul_bt(&p.w_q.value)?;
    for (a, &b) in dx.row_mut(len - 1).iter_mut().zip(dx_last.data()) {
        *a += b;
    }
    Ok(dx)
}

/// Output of [`full_attention_reference`].
#[derive(Clone, Debug)]
pub struct FullAttentionOutput<T> {
    /// L×d: one context row per query position.
    pub output: Matrix<T>,
    pub score_macs: u64,
}

/// Standard multi-head self-attention with a padding mask and no causal mask.
/// Every position queries every key, materializing an L×L score matrix per
/// head.
pub fn full_attention_reference<T: Scalar>(
    x: &Matrix<T>,
    pad_mask: &[bool],
    p: &AttentionParams<T>,
    n_heads: usize,
) -> Result<FullAttentionOutput<T>> {
    let d_k = check_inputs("full_attention_reference", x, pad_mask, p, n_heads)?;
    let len = x.rows();
    let q = x.matmul(&p.w_q.value)?;
    let k = x.matmul(&p.w_k.value)?;
    let v = x.matmul(&p.w_v.value)?;
    let scale = T::one() / T::lit(d_k as f64).sqrt();

    let mut concat = Matrix::zeros(len, p.d());
    let mut macs = 0u64;
    for h in 0..n_heads {
        let block = h * d_k..(h + 1) * d_k;
        let mut scores = Matrix::zeros(len, len);
        for i in 0..len {
            let qi = &q.row(i)[block.clone()];
            for j in 0..len {
                let kj = &k.row(j)[block.clone()];
                let mut acc = T::zero();
                for t in 0..d_k {
                    acc += qi[t] * kj[t];
                    macs += 1;
                }
                scores[(i, j)] = acc * scale;
            }
        }
        let weights = masked_row_softmax(&scores, pad_mask)?;
        for i in 0..len {
            for j in 0..len {
                let wij = weights[(i, j)];
                if wij != T::zero() {
                    let vj = v.row(j)[block.clone()].to_vec();
                    axpy(wij, &vj, &mut concat.row_mut(i)[block.clone()]);
                }
            }
        }
    }
    Ok(FullAttentionOutput {
        output: concat.matmul(&p.w_o.value)?,
        score_macs: macs,
    })
}
