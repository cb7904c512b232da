//! One LSTM layer over the encoder output, returning the final hidden state.
//!
//! Gate blocks are stored side by side in the order `[i | f | g | o]`, so
//! `w_x` is `d_in × 4d`, `w_h` is `d × 4d` and `b` is `1 × 4d`.

use crate::error::{Error, Result};
use crate::numcore::{init, ops, Matrix, Param, Parameters, Rng};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<T> {
    pub w_x: Param<T>,
    pub w_h: Param<T>,
    pub b: Param<T>,
}

impl<T: Scalar> LstmParams<T> {
    pub fn new(d_in: usize, d: usize, rng: &mut Rng) -> Self {
        let mut b = init::zeros(1, 4 * d);
        // forget-gate bias 1
        for j in d..2 * d {
            b.data_mut()[j] = T::one();
        }
        Self {
            w_x: Param::new("lstm.w_x", init::xavier_uniform(d_in, 4 * d, rng)),
            w_h: Param::new("lstm.w_h", init::xavier_uniform(d, 4 * d, rng)),
            b: Param::new("lstm.b", b),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.value.rows()
    }
}

impl<T: Scalar> Parameters<T> for LstmParams<T> {
    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.w_x, &self.w_h, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.b]
    }
}

#[derive(Clone, Debug)]
pub struct LstmCache<T> {
    x: Matrix<T>,
    /// Post-activation gates per step, L × 4d.
    gates: Matrix<T>,
    /// Cell states c_1..c_L.
    cells: Matrix<T>,
    /// Hidden states h_1..h_L.
    hiddens: Matrix<T>,
}

/// Runs the recurrence from `h_0 = c_0 = 0` over every row of `x`.
pub fn lstm_forward<T: Scalar>(x: &Matrix<T>, p: &LstmParams<T>) -> Result<(Matrix<T>, LstmCache<T>)> {
    let d = p.hidden();
    if x.rows() == 0 {
        return Err(Error::Argument("LSTM input has no rows".into()));
    }
    let pre_x = ops::broadcast_add_row(&x.matmul(&p.w_x.value)?, &p.b.value)?;
    let len = x.rows();
    let mut gates = Matrix::zeros(len, 4 * d);
    let mut cells = Matrix::zeros(len, d);
    let mut hiddens = Matrix::zeros(len, d);
    let mut h_prev = Matrix::zeros(1, d);
    let mut c_prev = vec![T::zero(); d];
    for t in 0..len {
        let z = h_prev.matmul(&p.w_h.value)?;
        let gt = gates.row_mut(t);
        for j in 0..4 * d {
            let v = z.data()[j] + pre_x[(t, j)];
            gt[j] = if (2 * d..3 * d).contains(&j) {
                ops::tanh(v)
            } else {
                ops::sigmoid(v)
            };
        }
        let (i, rest) = gt.split_at(d);
        let (f, rest) = rest.split_at(d);
        let (g, o) = rest.split_at(d);
        let ct = cells.row_mut(t);
        for j in 0..d {
            ct[j] = f[j] * c_prev[j] + i[j] * g[j];
        }
        c_prev.copy_from_slice(ct);
        let ht = hiddens.row_mut(t);
        for j in 0..d {
            ht[j] = o[j] * ops::tanh(c_prev[j]);
        }
        h_prev = Matrix::row_vector(ht.to_vec());
    }
    Ok((
        h_prev,
        LstmCache {
            x: x.clone(),
            gates,
            cells,
            hiddens,
        },
    ))
}

/// Backpropagation through time from `dh_last`; accumulates parameter
/// gradients and returns `dx`.
pub fn lstm_backward<T: Scalar>(cache: &LstmCache<T>, p: &mut LstmParams<T>, dh_last: &Matrix<T>) -> Result<Matrix<T>> {
    let d = p.hidden();
    let len = cache.x.rows();
    let one = T::one();
    let mut dz_all = Matrix::zeros(len, 4 * d);
    let mut dh = dh_last.data().to_vec();
    let mut dc = vec![T::zero(); d];
    for t in (0..len).rev() {
        let gt = cache.gates.row(t);
        let (i, rest) = gt.split_at(d);
        let (f, rest) = rest.split_at(d);
        let (g, o) = rest.split_at(d);
        let c = cache.cells.row(t);
        let dz = dz_all.row_mut(t);
        for j in 0..d {
            let c_prev = if t > 0 { cache.cells[(t - 1, j)] } else { T::zero() };
            let tc = ops::tanh(c[j]);
            let d_o = dh[j] * tc;
            dc[j] += dh[j] * o[j] * (one - tc * tc);
            let d_i = dc[j] * g[j];
            let d_g = dc[j] * i[j];
            let d_f = dc[j] * c_prev;
            dz[j] = d_i * i[j] * (one - i[j]);
            dz[d + j] = d_f * f[j] * (one - f[j]);
            dz[2 * d + j] = d_g * (one - g[j] * g[j]);
            dz[3 * d + j] = d_o * o[j] * (one - o[j]);
            dc[j] *= f[j];
        }
        let dz_row = Matrix::row_vector(dz.to_vec());
        if t > 0 {
            let h_prev = Matrix::row_vector(cache.hiddens.row(t - 1).to_vec());
            h_prev.matmul_at_acc(&dz_row, &mut p.w_h.grad)?;
        }
        dh = dz_row.matmul_bt(&p.w_h.value)?.into_data();
    }
    cache.x.matmul_at_acc(&dz_all, &mut p.w_x.grad)?;
    p.b.accumulate(&dz_all.column_sums());
    dz_all.matmul_bt(&p.w_x.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{numeric_gradient, relative_error};

    fn random(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<f64> {
        let data = (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn zero_params_stay_at_zero() {
        let mut rng = Rng::new(1);
        let mut p = LstmParams::<f64>::new(3, 4, &mut rng);
        for t in p.params_mut() {
            t.value.fill(0.0);
        }
        let (h, _) = lstm_forward(&random(5, 3, &mut rng), &p).unwrap();
        assert_eq!(h.data(), &[0.0; 4]);
    }

    #[test]
    fn single_step_matches_cell_formula() {
        let mut rng = Rng::new(2);
        let mut p = LstmParams::<f64>::new(3, 2, &mut rng);
        p.b.value = random(1, 8, &mut rng);
        let x = random(1, 3, &mut rng);
        let (h, _) = lstm_forward(&x, &p).unwrap();
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        for j in 0..2 {
            let pre = |gate: usize| {
                let col = gate * 2 + j;
                (0..3).map(|k| x[(0, k)] * p.w_x.value[(k, col)]).sum::<f64>() + p.b.value[(0, col)]
            };
            let (i, g, o) = (sig(pre(0)), pre(2).tanh(), sig(pre(3)));
            // c_0 = 0 so the forget gate drops out
            let c = i * g;
            assert!((h[(0, j)] - o * c.tanh()).abs() <= 1e-14);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(3);
        for trial in 0..20 {
            let len = 1 + trial % 6;
            let mut p = LstmParams::<f64>::new(3, 4, &mut rng);
            p.b.value = random(1, 16, &mut rng);
            let x = random(len, 3, &mut rng);
            let upstream = random(1, 4, &mut rng);
            let loss = |x: &Matrix<f64>, p: &LstmParams<f64>| {
                lstm_forward(x, p).unwrap().0.hadamard(&upstream).unwrap().sum()
            };
            let (_, cache) = lstm_forward(&x, &p).unwrap();
            let dx = lstm_backward(&cache, &mut p, &upstream).unwrap();
            assert!(relative_error(&dx, &numeric_gradient(&x, |m| loss(m, &p))) <= 1e-4);
            for idx in 0..3 {
                let numeric = numeric_gradient(&p.params()[idx].value, |m| {
                    let mut q = p.clone();
                    q.params_mut()[idx].value = m.clone();
                    loss(&x, &q)
                });
                let err = relative_error(&p.params()[idx].grad, &numeric);
                assert!(err <= 1e-4, "{} {err}", p.params()[idx].name);
            }
        }
    }
}
