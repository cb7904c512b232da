use super::{Matrix, Param};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment buffers for one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Matrix<T>,
    pub v: Matrix<T>,
    pub step: u64,
    pub config: AdamConfig,
}

impl<T: Scalar> AdamState<T> {
    pub fn for_param(param: &Param<T>, config: AdamConfig) -> Self {
        let (r, c) = param.shape();
        Self {
            m: Matrix::zeros(r, c),
            v: Matrix::zeros(r, c),
            step: 0,
            config,
        }
    }
}

/// One bias-corrected Adam update of `param` from its accumulated gradient.
pub fn adam_step<T: Scalar>(param: &mut Param<T>, state: &mut AdamState<T>) -> Result<()> {
    if state.m.shape() != param.shape() || state.v.shape() != param.shape() {
        return Err(Error::Dimension {
            op: "adam_step",
            lhs: param.shape(),
            rhs: state.m.shape(),
        });
    }
    state.step += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let c1 = T::lit(1.0 - beta1.powi(t));
    let c2 = T::lit(1.0 - beta2.powi(t));
    let (b1, b2) = (T::lit(beta1), T::lit(beta2));
    let (lr, eps) = (T::lit(lr), T::lit(epsilon));
    let one = T::one();

    let value = param.value.data_mut();
    let grad = param.grad.data();
    let m = state.m.data_mut();
    let v = state.v.data_mut();
    for i in 0..value.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (one - b1) * g;
        v[i] = b2 * v[i] + (one - b2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        value[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Adam over a whole parameter list, states kept in visiting order.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    states: Vec<AdamState<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: &[&Param<T>], config: AdamConfig) -> Self {
        Self {
            states: params.iter().map(|p| AdamState::for_param(p, config)).collect(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut Param<T>>) -> Result<()> {
        if params.len() != self.states.len() {
            return Err(Error::State("optimizer built for a different parameter list"));
        }
        for (p, s) in params.into_iter().zip(&mut self.states) {
            adam_step(p, s)?;
        }
        Ok(())
    }

    pub fn states(&self) -> &[AdamState<T>] {
        &self.states
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(value: f64, grad: f64) -> Param<f64> {
        let mut p = Param::new("theta", Matrix::row_vector(vec![value]));
        p.grad = Matrix::row_vector(vec![grad]);
        p
    }

    #[test]
    fn zero_grad_leaves_value() {
        let mut p = scalar_param(1.25, 0.0);
        let mut s = AdamState::for_param(&p, AdamConfig::default());
        adam_step(&mut p, &mut s).unwrap();
        assert_eq!(p.value.data(), &[1.25]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m = 0.01, v = 1e-5; bias-corrected m̂ = 0.1, v̂ = 0.01
        // update = 0.001 · 0.1 / (0.1 + 1e-8)
        let mut p = scalar_param(0.0, 0.1);
        let mut s = AdamState::for_param(&p, AdamConfig::default());
        adam_step(&mut p, &mut s).unwrap();
        let expected = -0.001 * 0.1 / (0.1 + 1e-8);
        assert!((p.value[(0, 0)] - expected).abs() < 1e-15);
        assert!((p.value[(0, 0)].abs() - 0.001).abs() <= 1e-7);
        assert!(s.v.data()[0] >= 0.0);
    }

    #[test]
    fn two_steps_are_deterministic() {
        let run = || {
            let mut p = scalar_param(0.3, -0.7);
            let mut s = AdamState::for_param(&p, AdamConfig::default());
            adam_step(&mut p, &mut s).unwrap();
            p.grad = Matrix::row_vector(vec![0.2]);
            adam_step(&mut p, &mut s).unwrap();
            (p.value[(0, 0)].to_bits(), s.m[(0, 0)].to_bits(), s.v[(0, 0)].to_bits())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = scalar_param(0.0, 0.1);
        let mut s = AdamState::for_param(&Param::new("x", Matrix::<f64>::zeros(2, 2)), AdamConfig::default());
        assert!(adam_step(&mut p, &mut s).is_err());
    }
}
