use super::loss::bce_loss;
use super::metrics::auc;
use crate::error::{Error, Result};
use crate::features::FeatureWindow;
use crate::model::{forward, ModelParams};
use crate::scalar::Scalar;

/// Checks that members share `d`, `L` and the question vocabulary. Head counts
/// may differ.
pub fn check_compatible<T>(models: &[&ModelParams<T>]) -> Result<()> {
    let first = models
        .first()
        .ok_or_else(|| Error::Argument("ensemble needs at least one model".into()))?;
    for m in &models[1..] {
        let (a, b) = (&first.config, &m.config);
        if a.d != b.d || a.seq_len != b.seq_len || a.n_questions != b.n_questions {
            return Err(Error::Config(format!(
                "incompatible ensemble members: d={} L={} questions={} vs d={} L={} questions={}",
                a.d, a.seq_len, a.n_questions, b.d, b.seq_len, b.n_questions
            )));
        }
    }
    Ok(())
}

/// Mean of the member probabilities.
pub fn ensemble_predict<T: Scalar>(models: &[&ModelParams<T>], w: &FeatureWindow) -> Result<f64> {
    check_compatible(models)?;
    let preds = models
        .iter()
        .map(|m| forward(w, m).map(|p| p.as_f64()))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&preds))
}

/// Arithmetic mean, taken as an offset from the first value so that equal
/// values average to themselves exactly.
pub fn mean(values: &[f64]) -> f64 {
    let base = values[0];
    base + values.iter().map(|v| v - base).sum::<f64>() / values.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// AUC of the ensemble mean (of the single model when there is one).
    pub auc: f64,
    /// Mean binary cross-entropy of the ensemble mean.
    pub loss: f64,
    pub n_examples: usize,
    pub member_aucs: Vec<f64>,
}

/// Member probabilities for every window, one row per member.
pub fn member_predictions<T: Scalar>(models: &[&ModelParams<T>], windows: &[FeatureWindow]) -> Result<Vec<Vec<f64>>> {
    check_compatible(models)?;
    models
        .iter()
        .map(|m| windows.iter().map(|w| forward(w, m).map(|p| p.as_f64())).collect())
        .collect()
}

/// Scores `windows` with each member and with the mean of their probabilities.
pub fn evaluate<T: Scalar>(models: &[&ModelParams<T>], windows: &[FeatureWindow]) -> Result<EvalReport> {
    if windows.is_empty() {
        return Err(Error::Argument("no examples to evaluate".into()));
    }
    let preds = member_predictions(models, windows)?;
    report_from_predictions(&preds, windows)
}

pub fn report_from_predictions(preds: &[Vec<f64>], windows: &[FeatureWindow]) -> Result<EvalReport> {
    if preds.is_empty() || preds.iter().any(|p| p.len() != windows.len()) {
        return Err(Error::Argument("need one prediction per window for each member".into()));
    }
    let labels: Vec<u8> = windows.iter().map(|w| w.label).collect();
    let means: Vec<f64> = (0..windows.len())
        .map(|i| mean(&preds.iter().map(|p| p[i]).collect::<Vec<_>>()))
        .collect();
    let member_aucs = preds.iter().map(|p| auc(p, &labels)).collect::<Result<Vec<_>>>()?;
    let loss = means.iter().zip(&labels).map(|(&p, &y)| bce_loss(p, y)).sum::<f64>() / means.len() as f64;
    Ok(EvalReport {
        auc: auc(&means, &labels)?,
        loss,
        n_examples: windows.len(),
        member_aucs,
    })
}
