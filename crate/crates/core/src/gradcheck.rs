//! Central finite-difference gradient checking.
//!
//! This is the oracle for every analytic backward pass in the crate. It only
//! calls forward functions, so it shares no code path with the backward
//! implementations it checks.

use crate::error::{Error, Result};
use crate::features::{FeatureWindow, Interaction, UserFeatures};
use crate::model::{backward, forward_logit, ModelConfig, ModelParams};
use crate::numcore::{Matrix, Parameters, Rng};
use crate::training::bce_with_logit;

/// Step for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Pass threshold on [`relative_error`].
pub const GRAD_TOLERANCE: f64 = 1e-4;

/// Gradients smaller than this are compared on an absolute scale.
pub const GRAD_FLOOR: f64 = 1e-6;

/// `(f(x + h e_i) − f(x − h e_i)) / 2h` for every entry of `x`.
pub fn numeric_gradient(x: &Matrix<f64>, mut f: impl FnMut(&Matrix<f64>) -> f64) -> Matrix<f64> {
    let mut probe = x.clone();
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.data().len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + FD_STEP;
        let up = f(&probe);
        probe.data_mut()[i] = orig - FD_STEP;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (up - down) / (2.0 * FD_STEP);
    }
    grad
}

/// Entry-wise relative error `|a − n| / max(|a|, |n|, GRAD_FLOOR)`.
pub fn entry_relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(GRAD_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Maximum [`entry_relative_error`] over a tensor.
pub fn relative_error(analytic: &Matrix<f64>, numeric: &Matrix<f64>) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape(), "gradient shapes differ");
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| entry_relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Outcome for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub shape: (usize, usize),
    pub max_rel_error: f64,
}

impl TensorCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= GRAD_TOLERANCE
    }
}

/// Windows for the model-wide check: one padded, the rest full length.
pub fn check_windows(config: &ModelConfig, n: usize, rng: &mut Rng) -> Result<Vec<FeatureWindow>> {
    (0..n)
        .map(|k| {
            let len = if k == 0 { (config.seq_len / 2).max(1) } else { config.seq_len + 3 };
            let mut t = 0;
            let h: Vec<Interaction> = (0..len)
                .map(|j| {
                    t += rng.range_inclusive(1_000, 400_000_000);
                    Interaction {
                        user_id: k as u64,
                        question_id: rng.below(config.n_questions) as u32,
                        part: rng.range_inclusive(1, 7) as u8,
                        timestamp_ms: t,
                        answered_correctly: rng.bernoulli(0.5),
                        prior_elapsed_ms: (j > 0).then(|| rng.range_inclusive(0, 400_000)),
                    }
                })
                .collect();
            UserFeatures::from_interactions(&h)?.window(len - 1, config.seq_len)
        })
        .collect()
}

fn total_loss(theta: &ModelParams<f64>, windows: &[FeatureWindow]) -> Result<f64> {
    windows.iter().try_fold(0.0, |acc, w| {
        let (z, _) = forward_logit(w, theta)?;
        Ok(acc + bce_with_logit(z, w.label).0)
    })
}

/// Compares the analytic gradient of the summed BCE over a few windows with
/// central finite differences, for every parameter tensor of a freshly
/// initialized model.
///
/// `corrupt` names a tensor whose analytic gradient is deliberately perturbed
/// before comparison; it exists to show that the check can fail.
pub fn check_model_gradients(config: &ModelConfig, seed: u64, corrupt: Option<&str>) -> Result<Vec<TensorCheck>> {
    let mut rng = Rng::new(seed);
    let mut theta = ModelParams::<f64>::new(*config, &mut rng)?;
    let windows = check_windows(config, 3, &mut rng)?;

    theta.zero_grads();
    for w in &windows {
        let (z, cache) = forward_logit(w, &theta)?;
        let (_, dlogit) = bce_with_logit(z, w.label);
        backward(&cache, &mut theta, dlogit)?;
    }
    let mut analytic: Vec<(String, Matrix<f64>)> = theta.params().iter().map(|p| (p.name.clone(), p.grad.clone())).collect();
    if let Some(target) = corrupt {
        let (_, g) = analytic
            .iter_mut()
            .find(|(n, _)| n == target)
            .ok_or_else(|| Error::Argument(format!("no parameter tensor named `{target}`")))?;
        *g = g.map(|v| 1.1 * v + 1e-3);
    }

    let mut probe = theta.clone();
    let mut out = Vec::with_capacity(analytic.len());
    for (t, (name, grad)) in analytic.iter().enumerate() {
        let mut numeric = Matrix::zeros(grad.rows(), grad.cols());
        for i in 0..grad.data().len() {
            let orig = probe.params()[t].value.data()[i];
            let mut at = |v: f64| -> Result<f64> {
                probe.params_mut()[t].value.data_mut()[i] = v;
                total_loss(&probe, &windows)
            };
            let up = at(orig + FD_STEP)?;
            let down = at(orig - FD_STEP)?;
            at(orig)?;
            numeric.data_mut()[i] = (up - down) / (2.0 * FD_STEP);
        }
        out.push(TensorCheck {
            name: name.clone(),
            shape: grad.shape(),
            max_rel_error: relative_error(grad, &numeric),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        let x = Matrix::from_rows(&[[1.0, -2.0, 0.5]]).unwrap();
        let g = numeric_gradient(&x, |m| m.data().iter().map(|v| v * v).sum());
        let exact = x.scale(2.0);
        assert!(relative_error(&exact, &g) < 1e-9);
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let g = numeric_gradient(&x, |m| m.sum());
        let wrong = Matrix::from_rows(&[[1.0, 1.1]]).unwrap();
        assert!(relative_error(&wrong, &g) > GRAD_TOLERANCE);
    }

    #[test]
    fn whole_model_passes_and_corruption_is_caught() {
        let cfg = ModelConfig::tiny();
        let checks = check_model_gradients(&cfg, 1, None).unwrap();
        assert_eq!(checks.len(), ModelParams::<f64>::new(cfg, &mut Rng::new(0)).unwrap().params().len());
        for c in &checks {
            assert!(c.passed(), "{} {}", c.name, c.max_rel_error);
        }
        let bad = check_model_gradients(&cfg, 1, Some("lstm.w_h")).unwrap();
        for (c, b) in checks.iter().zip(&bad) {
            assert_eq!(b.passed(), b.name != "lstm.w_h", "{}", b.name);
            if b.name != "lstm.w_h" {
                assert_eq!(c, b);
            }
        }
        assert!(check_model_gradients(&cfg, 1, Some("nope")).is_err());
    }
}
