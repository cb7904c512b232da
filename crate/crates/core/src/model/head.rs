use crate::error::Result;
use crate::numcore::{init, ops, Matrix, Param, Parameters, Rng};
use crate::scalar::Scalar;

/// Prediction DNN: `relu(h W1 + b1) W2 + b2`, a single pre-sigmoid logit.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams<T> {
    pub w1: Param<T>,
    pub b1: Param<T>,
    pub w2: Param<T>,
    pub b2: Param<T>,
}

impl<T: Scalar> HeadParams<T> {
    pub fn new(d: usize, rng: &mut Rng) -> Self {
        Self {
            w1: Param::new("head.w1", init::xavier_uniform(d, d, rng)),
            b1: Param::new("head.b1", init::zeros(1, d)),
            w2: Param::new("head.w2", init::xavier_uniform(d, 1, rng)),
            b2: Param::new("head.b2", init::zeros(1, 1)),
        }
    }
}

impl<T: Scalar> Parameters<T> for HeadParams<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

#[derive(Clone, Debug)]
pub struct HeadCache<T> {
    h: Matrix<T>,
    pre: Matrix<T>,
    act: Matrix<T>,
}

pub fn head_forward<T: Scalar>(h: &Matrix<T>, p: &HeadParams<T>) -> Result<(T, HeadCache<T>)> {
    let pre = ops::broadcast_add_row(&h.matmul(&p.w1.value)?, &p.b1.value)?;
    let act = ops::relu_m(&pre);
    let logit = act.matmul(&p.w2.value)?[(0, 0)] + p.b2.value[(0, 0)];
    Ok((
        logit,
        HeadCache {
            h: h.clone(),
            pre,
            act,
        },
    ))
}

/// Accumulates gradients from `dlogit` and returns `dh`.
pub fn head_backward<T: Scalar>(cache: &HeadCache<T>, p: &mut HeadParams<T>, dlogit: T) -> Result<Matrix<T>> {
    let g = Matrix::row_vector(vec![dlogit]);
    cache.act.matmul_at_acc(&g, &mut p.w2.grad)?;
    p.b2.grad.data_mut()[0] += dlogit;
    let dact = g.matmul_bt(&p.w2.value)?;
    let dpre = ops::relu_backward(&cache.pre, &dact);
    cache.h.matmul_at_acc(&dpre, &mut p.w1.grad)?;
    p.b1.accumulate(&dpre);
    dpre.matmul_bt(&p.w1.value)
}
