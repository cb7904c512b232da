//! Five-channel input embedding merged into one `d`-wide vector per position.
//!
//! Categorical channels (question, part, correctness) use lookup tables; the
//! two continuous channels use `value · w + b`. The five `d_e`-wide pieces are
//! concatenated and passed through `relu(· W1 + b1) W2 + b2`.

use super::window::FeatureWindow;
use crate::error::{Error, Result};
use crate::numcore::{init, ops, Matrix, Param, Parameters, Rng};
use crate::scalar::Scalar;

pub const N_PART_TOKENS: usize = 8;
pub const N_CORRECTNESS_TOKENS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbedParams<T> {
    /// `(n_questions + 1) × d_e`; row 0 is the PAD row.
    pub question: Param<T>,
    pub part: Param<T>,
    pub correctness: Param<T>,
    pub elapsed_w: Param<T>,
    pub elapsed_b: Param<T>,
    pub tdiff_w: Param<T>,
    pub tdiff_b: Param<T>,
    pub merge_w1: Param<T>,
    pub merge_b1: Param<T>,
    pub merge_w2: Param<T>,
    pub merge_b2: Param<T>,
}

impl<T: Scalar> EmbedParams<T> {
    pub fn new(n_questions: usize, d_e: usize, d: usize, rng: &mut Rng) -> Self {
        Self {
            question: Param::new("embed.question", init::xavier_uniform(n_questions + 1, d_e, rng)),
            part: Param::new("embed.part", init::xavier_uniform(N_PART_TOKENS, d_e, rng)),
            correctness: Param::new(
                "embed.correctness",
                init::xavier_uniform(N_CORRECTNESS_TOKENS, d_e, rng),
            ),
            elapsed_w: Param::new("embed.elapsed_w", init::xavier_uniform(1, d_e, rng)),
            elapsed_b: Param::new("embed.elapsed_b", init::zeros(1, d_e)),
            tdiff_w: Param::new("embed.tdiff_w", init::xavier_uniform(1, d_e, rng)),
            tdiff_b: Param::new("embed.tdiff_b", init::zeros(1, d_e)),
            merge_w1: Param::new("embed.merge_w1", init::xavier_uniform(5 * d_e, d, rng)),
            merge_b1: Param::new("embed.merge_b1", init::zeros(1, d)),
            merge_w2: Param::new("embed.merge_w2", init::xavier_uniform(d, d, rng)),
            merge_b2: Param::new("embed.merge_b2", init::zeros(1, d)),
        }
    }

    pub fn d_e(&self) -> usize {
        self.part.value.cols()
    }

    pub fn d(&self) -> usize {
        self.merge_w2.value.cols()
    }

    pub fn n_questions(&self) -> usize {
        self.question.value.rows() - 1
    }
}

impl<T: Scalar> Parameters<T> for EmbedParams<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![
            &self.question,
            &self.part,
            &self.correctness,
            &self.elapsed_w,
            &self.elapsed_b,
            &self.tdiff_w,
            &self.tdiff_b,
            &self.merge_w1,
            &self.merge_b1,
            &self.merge_w2,
            &self.merge_b2,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![
            &mut self.question,
            &mut self.part,
            &mut self.correctness,
            &mut self.elapsed_w,
            &mut self.elapsed_b,
            &mut self.tdiff_w,
            &mut self.tdiff_b,
            &mut self.merge_w1,
            &mut self.merge_b1,
            &mut self.merge_w2,
            &mut self.merge_b2,
        ]
    }
}

/// The L×d sequence `I_1..I_L` plus the padding mask it was built under.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedSequence<T> {
    pub x: Matrix<T>,
    pub pad_mask: Vec<bool>,
}

/// Activations saved for [`embed_backward`].
#[derive(Clone, Debug)]
pub struct EmbedCache<T> {
    question: Vec<usize>,
    part: Vec<usize>,
    correctness: Vec<usize>,
    elapsed: Vec<T>,
    tdiff: Vec<T>,
    concat: Matrix<T>,
    hidden_pre: Matrix<T>,
    hidden: Matrix<T>,
}

fn check_token(table: &'static str, token: usize, size: usize) -> Result<usize> {
    if token < size {
        Ok(token)
    } else {
        Err(Error::Index {
            table,
            index: token,
            size,
        })
    }
}

/// Embeds every position of `w`.
pub fn embed_window<T: Scalar>(w: &FeatureWindow, p: &EmbedParams<T>) -> Result<EmbeddedSequence<T>> {
    let (x, _) = embed_forward(w, 0, p)?;
    Ok(EmbeddedSequence {
        x,
        pad_mask: w.pad_mask.clone(),
    })
}

/// Embeds positions `start..L` of `w`, returning the `(L − start)×d` rows and
/// the cache for backward. Positions are independent of each other.
pub fn embed_forward<T: Scalar>(
    w: &FeatureWindow,
    start: usize,
    p: &EmbedParams<T>,
) -> Result<(Matrix<T>, EmbedCache<T>)> {
    let d_e = p.d_e();
    let n = w.len() - start;
    let mut cache = EmbedCache {
        question: Vec::with_capacity(n),
        part: Vec::with_capacity(n),
        correctness: Vec::with_capacity(n),
        elapsed: Vec::with_capacity(n),
        tdiff: Vec::with_capacity(n),
        concat: Matrix::zeros(n, 5 * d_e),
        hidden_pre: Matrix::zeros(0, 0),
        hidden: Matrix::zeros(0, 0),
    };
    for (row, k) in (start..w.len()).enumerate() {
        let q = check_token("question table", w.question[k] as usize, p.question.value.rows())?;
        let pt = check_token("part table", w.part[k] as usize, N_PART_TOKENS)?;
        let c = check_token("correctness table", w.correctness[k] as usize, N_CORRECTNESS_TOKENS)?;
        let el = T::lit(w.elapsed[k]);
        let td = T::lit(w.tdiff[k]);

        let out = cache.concat.row_mut(row);
        out[..d_e].copy_from_slice(p.question.value.row(q));
        out[d_e..2 * d_e].copy_from_slice(p.part.value.row(pt));
        out[2 * d_e..3 * d_e].copy_from_slice(p.correctness.value.row(c));
        for j in 0..d_e {
            out[3 * d_e + j] = el * p.elapsed_w.value.data()[j] + p.elapsed_b.value.data()[j];
            out[4 * d_e + j] = td * p.tdiff_w.value.data()[j] + p.tdiff_b.value.data()[j];
        }
        cache.question.push(q);
        cache.part.push(pt);
        cache.correctness.push(c);
        cache.elapsed.push(el);
        cache.tdiff.push(td);
    }
    let hidden_pre = ops::broadcast_add_row(&cache.concat.matmul(&p.merge_w1.value)?, &p.merge_b1.value)?;
    let hidden = ops::relu_m(&hidden_pre);
    let x = ops::broadcast_add_row(&hidden.matmul(&p.merge_w2.value)?, &p.merge_b2.value)?;
    cache.hidden_pre = hidden_pre;
    cache.hidden = hidden;
    Ok((x, cache))
}

/// Accumulates parameter gradients from `dx` (same rows as the forward output).
pub fn embed_backward<T: Scalar>(cache: &EmbedCache<T>, p: &mut EmbedParams<T>, dx: &Matrix<T>) -> Result<()> {
    let d_e = p.d_e();
    cache.hidden.matmul_at_acc(dx, &mut p.merge_w2.grad)?;
    p.merge_b2.accumulate(&dx.column_sums());
    let dhidden = dx.matmul_bt(&p.merge_w2.value)?;
    let dpre = ops::relu_backward(&cache.hidden_pre, &dhidden);
    cache.concat.matmul_at_acc(&dpre, &mut p.merge_w1.grad)?;
    p.merge_b1.accumulate(&dpre.column_sums());
    let dconcat = dpre.matmul_bt(&p.merge_w1.value)?;

    for row in 0..dconcat.rows() {
        let g = dconcat.row(row);
        let scatter = |table: &mut Param<T>, idx: usize, block: &[T]| {
            for (t, &v) in table.grad.row_mut(idx).iter_mut().zip(block) {
                *t += v;
            }
        };
        scatter(&mut p.question, cache.question[row], &g[..d_e]);
        scatter(&mut p.part, cache.part[row], &g[d_e..2 * d_e]);
        scatter(&mut p.correctness, cache.correctness[row], &g[2 * d_e..3 * d_e]);
        let (el, td) = (cache.elapsed[row], cache.tdiff[row]);
        for j in 0..d_e {
            let ge = g[3 * d_e + j];
            let gt = g[4 * d_e + j];
            p.elapsed_w.grad.data_mut()[j] += el * ge;
            p.elapsed_b.grad.data_mut()[j] += ge;
            p.tdiff_w.grad.data_mut()[j] += td * gt;
            p.tdiff_b.grad.data_mut()[j] += gt;
        }
    }
    Ok(())
}
