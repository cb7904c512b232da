use std::fmt;
use std::time::Instant;

use super::dataset::Dataset;
use super::ensemble::evaluate;
use super::loss::bce_with_logit;
use crate::error::{Error, Result};
use crate::model::{LastQueryModel, ModelConfig, ModelParams};
use crate::numcore::{Adam, AdamConfig, Parameters, Rng};
use crate::scalar::Scalar;

pub const DESK_ENSEMBLE_HEADS: [usize; 2] = [2, 4];
pub const FULL_ENSEMBLE_HEADS: [usize; 5] = [2, 4, 8, 16, 32];

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub model: ModelConfig,
    /// Head counts of the ensemble members; `model.n_heads` is used for a
    /// single model.
    pub ensemble_heads: Vec<usize>,
}

impl TrainConfig {
    pub fn new(model: ModelConfig) -> Self {
        Self {
            epochs: 10,
            batch_size: 64,
            lr: 1e-3,
            seed: 0,
            model,
            ensemble_heads: DESK_ENSEMBLE_HEADS.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        self.model.validate()?;
        for &h in &self.ensemble_heads {
            self.member_config(h).validate()?;
        }
        Ok(())
    }

    /// Model config of the ensemble member with `n_heads` heads.
    pub fn member_config(&self, n_heads: usize) -> ModelConfig {
        ModelConfig { n_heads, ..self.model }
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` when validation has a single class.
    pub valid_auc: Option<f64>,
    pub seconds: f64,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let auc = self.valid_auc.map_or_else(|| "nan".to_string(), |a| format!("{a:.6}"));
        write!(f, "{}\t{:.6}\t{}\t{:.3}", self.epoch, self.train_loss, auc, self.seconds)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    /// Parameters of the epoch with the best validation AUC.
    pub params: ModelParams<T>,
    pub log: Vec<EpochLog>,
    /// 1-based; `None` if no epoch ran or validation never produced an AUC.
    pub best_epoch: Option<usize>,
}

pub fn train<T: Scalar>(dataset: &Dataset, cfg: &TrainConfig, rng: &mut Rng) -> Result<TrainOutcome<T>> {
    train_with(dataset, cfg, rng, |_| {})
}

/// Like [`train`], calling `on_epoch` as each epoch finishes.
pub fn train_with<T: Scalar>(
    dataset: &Dataset,
    cfg: &TrainConfig,
    rng: &mut Rng,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let mut model = LastQueryModel::new(ModelParams::<T>::new(cfg.model, rng)?);
    let adam_cfg = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let mut opt = Adam::new(&model.params.params(), adam_cfg);
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams<T>)> = None;

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            model.zero_grads();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let w = &dataset.train[i];
                let logit = model.forward(w)?;
                let (loss, dlogit) = bce_with_logit(logit.as_f64(), w.label);
                loss_sum += loss;
                model.backward(T::lit(dlogit * scale))?;
            }
            opt.step(model.params.params_mut())?;
        }
        let valid_auc = if dataset.valid.is_empty() {
            None
        } else {
            match evaluate(&[&model.params], &dataset.valid) {
                Ok(r) => Some(r.auc),
                Err(Error::MetricUndefined(_)) => None,
                Err(e) => return Err(e),
            }
        };
        let entry = EpochLog {
            epoch,
            train_loss: loss_sum / dataset.train.len() as f64,
            valid_auc,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&entry);
        log.push(entry);
        if let Some(a) = valid_auc {
            if best.as_ref().is_none_or(|(b, _, _)| a > *b) {
                best = Some((a, epoch, model.params.clone()));
            }
        }
    }

    let (params, best_epoch) = match best {
        Some((_, e, p)) => (p, Some(e)),
        None => (model.into_params(), None),
    };
    Ok(TrainOutcome { params, log, best_epoch })
}
