//! Differentiable building blocks. Each forward has a matching `*_backward`
//! that maps an upstream gradient to input (and parameter) gradients.

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LAYERNORM_EPS: f64 = 1e-5;

/// Gradients of `C = A · B` given `dC`: returns `(dA, dB) = (dC·Bᵀ, Aᵀ·dC)`.
pub fn matmul_backward<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    dc: &Matrix<T>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    Ok((dc.matmul_bt(b)?, a.matmul_at(dc)?))
}

/// Softmax of one row restricted to unmasked entries (`mask[j] == true` means
/// padding). Masked outputs are exactly zero and their logits are never read.
/// Returns `false` when every entry is masked.
pub(crate) fn masked_softmax_into<T: Scalar>(logits: &[T], mask: &[bool], out: &mut [T]) -> bool {
    let mut max = T::neg_infinity();
    let mut any = false;
    for (&z, &m) in logits.iter().zip(mask) {
        if !m {
            any = true;
            if z > max {
                max = z;
            }
        }
    }
    if !any {
        return false;
    }
    let mut sum = T::zero();
    for ((o, &z), &m) in out.iter_mut().zip(logits).zip(mask) {
        *o = if m {
            T::zero()
        } else {
            let e = (z - max).exp();
            sum += e;
            e
        };
    }
    let inv = T::one() / sum;
    for (o, &m) in out.iter_mut().zip(mask) {
        if !m {
            *o *= inv;
        }
    }
    true
}

/// Row-wise softmax over the key axis with a per-column padding mask.
pub fn masked_row_softmax<T: Scalar>(scores: &Matrix<T>, key_mask: &[bool]) -> Result<Matrix<T>> {
    if key_mask.len() != scores.cols() {
        return Err(Error::Dimension {
            op: "masked_row_softmax",
            lhs: scores.shape(),
            rhs: (1, key_mask.len()),
        });
    }
    let mut out = Matrix::zeros(scores.rows(), scores.cols());
    for i in 0..scores.rows() {
        if !masked_softmax_into(scores.row(i), key_mask, out.row_mut(i)) {
            return Err(Error::DegenerateMask { row: i });
        }
    }
    Ok(out)
}

/// Backward of a row softmax given its output `y`: `dx = y ⊙ (dy − ⟨dy, y⟩)`.
/// Masked positions have `y == 0` and therefore receive zero gradient.
pub(crate) fn softmax_backward_into<T: Scalar>(y: &[T], dy: &[T], dx: &mut [T]) {
    let inner: T = y.iter().zip(dy).map(|(&a, &b)| a * b).sum();
    for ((d, &yi), &dyi) in dx.iter_mut().zip(y).zip(dy) {
        *d = yi * (dyi - inner);
    }
}

pub fn masked_row_softmax_backward<T: Scalar>(y: &Matrix<T>, dy: &Matrix<T>) -> Matrix<T> {
    let mut dx = Matrix::zeros(y.rows(), y.cols());
    for i in 0..y.rows() {
        softmax_backward_into(y.row(i), dy.row(i), dx.row_mut(i));
    }
    dx
}

/// Saved activations from [`layernorm_forward`].
#[derive(Clone, Debug)]
pub struct LayerNormCache<T> {
    pub xhat: Matrix<T>,
    pub inv_std: Vec<T>,
}

pub fn layernorm<T: Scalar>(x: &Matrix<T>, gamma: &Matrix<T>, beta: &Matrix<T>) -> Result<Matrix<T>> {
    layernorm_forward(x, gamma, beta).map(|(y, _)| y)
}

/// Per-row normalization to zero mean / unit variance (biased variance,
/// epsilon 1e-5), then `gamma ⊙ x̂ + beta`. `gamma` and `beta` are 1×cols.
pub fn layernorm_forward<T: Scalar>(
    x: &Matrix<T>,
    gamma: &Matrix<T>,
    beta: &Matrix<T>,
) -> Result<(Matrix<T>, LayerNormCache<T>)> {
    let d = x.cols();
    for p in [gamma, beta] {
        if p.shape() != (1, d) {
            return Err(Error::Dimension {
                op: "layernorm",
                lhs: x.shape(),
                rhs: p.shape(),
            });
        }
    }
    let n = T::lit(d as f64);
    let eps = T::lit(LAYERNORM_EPS);
    let mut xhat = Matrix::zeros(x.rows(), d);
    let mut y = Matrix::zeros(x.rows(), d);
    let mut inv_std = Vec::with_capacity(x.rows());
    for i in 0..x.rows() {
        let row = x.row(i);
        let mean = row.iter().copied().sum::<T>() / n;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let s = T::one() / (var + eps).sqrt();
        inv_std.push(s);
        let xh = xhat.row_mut(i);
        for (o, &v) in xh.iter_mut().zip(row) {
            *o = (v - mean) * s;
        }
        let yr = y.row_mut(i);
        for j in 0..d {
            yr[j] = gamma.data()[j] * xhat[(i, j)] + beta.data()[j];
        }
    }
    Ok((y, LayerNormCache { xhat, inv_std }))
}

/// Returns `(dx, dgamma, dbeta)`.
pub fn layernorm_backward<T: Scalar>(
    cache: &LayerNormCache<T>,
    gamma: &Matrix<T>,
    dy: &Matrix<T>,
) -> (Matrix<T>, Matrix<T>, Matrix<T>) {
    let (rows, d) = cache.xhat.shape();
    let n = T::lit(d as f64);
    let mut dx = Matrix::zeros(rows, d);
    let mut dgamma = Matrix::zeros(1, d);
    let mut dbeta = Matrix::zeros(1, d);
    let mut dxhat = vec![T::zero(); d];
    for i in 0..rows {
        let xh = cache.xhat.row(i);
        let dyr = dy.row(i);
        let mut sum_dxhat = T::zero();
        let mut sum_dxhat_xhat = T::zero();
        for j in 0..d {
            dgamma.data_mut()[j] += dyr[j] * xh[j];
            dbeta.data_mut()[j] += dyr[j];
            dxhat[j] = dyr[j] * gamma.data()[j];
            sum_dxhat += dxhat[j];
            sum_dxhat_xhat += dxhat[j] * xh[j];
        }
        let scale = cache.inv_std[i] / n;
        let dxr = dx.row_mut(i);
        for j in 0..d {
            dxr[j] = scale * (n * dxhat[j] - sum_dxhat - xh[j] * sum_dxhat_xhat);
        }
    }
    (dx, dgamma, dbeta)
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[inline]
pub fn tanh<T: Scalar>(x: T) -> T {
    x.tanh()
}

#[inline]
pub fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

pub fn sigmoid_m<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    x.map(sigmoid)
}

pub fn tanh_m<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    x.map(tanh)
}

pub fn relu_m<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    x.map(relu)
}

/// `dx = dy ⊙ 1[x > 0]`, using the pre-activation `x`.
pub fn relu_backward<T: Scalar>(x: &Matrix<T>, dy: &Matrix<T>) -> Matrix<T> {
    let data = x
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&xi, &g)| if xi > T::zero() { g } else { T::zero() })
        .collect();
    Matrix::new(x.rows(), x.cols(), data).expect("same shape")
}

/// `dx = dy ⊙ y(1 − y)` from the sigmoid output `y`.
pub fn sigmoid_backward<T: Scalar>(y: &Matrix<T>, dy: &Matrix<T>) -> Matrix<T> {
    let data = y
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&s, &g)| g * s * (T::one() - s))
        .collect();
    Matrix::new(y.rows(), y.cols(), data).expect("same shape")
}

/// `dx = dy ⊙ (1 − y²)` from the tanh output `y`.
pub fn tanh_backward<T: Scalar>(y: &Matrix<T>, dy: &Matrix<T>) -> Matrix<T> {
    let data = y
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&t, &g)| g * (T::one() - t * t))
        .collect();
    Matrix::new(y.rows(), y.cols(), data).expect("same shape")
}

/// Adds the 1×d row `r` to every row of the L×d matrix `x`.
pub fn broadcast_add_row<T: Scalar>(x: &Matrix<T>, r: &Matrix<T>) -> Result<Matrix<T>> {
    if r.shape() != (1, x.cols()) {
        return Err(Error::Dimension {
            op: "broadcast_add_row",
            lhs: x.shape(),
            rhs: r.shape(),
        });
    }
    let mut out = x.clone();
    for i in 0..x.rows() {
        for (o, &b) in out.row_mut(i).iter_mut().zip(r.data()) {
            *o += b;
        }
    }
    Ok(out)
}

/// Returns `(dx, dr)`: the identity for `x` and column sums for the row.
pub fn broadcast_add_row_backward<T: Scalar>(dy: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    (dy.clone(), dy.column_sums())
}
