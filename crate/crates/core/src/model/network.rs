//! Full model: embedding → encoder block → LSTM → head → sigmoid.
//!
//! Padded positions are masked out of attention and skipped by the LSTM, so
//! the forward pass only computes the real suffix of a window. Predictions
//! therefore do not depend on how much left padding a window carries.

use super::config::ModelConfig;
use super::encoder::{encoder_backward, encoder_forward, EncoderCache, EncoderParams};
use super::head::{head_backward, head_forward, HeadCache, HeadParams};
use super::lstm::{lstm_backward, lstm_forward, LstmCache, LstmParams};
use crate::error::{Error, Result};
use crate::features::{embed_backward, embed_forward, EmbedCache, EmbedParams, FeatureWindow};
use crate::numcore::{ops, Param, Parameters, Rng};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    pub embed: EmbedParams<T>,
    pub encoder: EncoderParams<T>,
    pub lstm: LstmParams<T>,
    pub head: HeadParams<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(config: ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            embed: EmbedParams::new(config.n_questions, config.d_e, config.d, rng),
            encoder: EncoderParams::new(config.d, config.d_ff, rng),
            lstm: LstmParams::new(config.d, config.d, rng),
            head: HeadParams::new(config.d, rng),
            config,
        })
    }
}

impl<T: Scalar> Parameters<T> for ModelParams<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut v = self.embed.params();
        v.extend(self.encoder.params());
        v.extend(self.lstm.params());
        v.extend(self.head.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = self.embed.params_mut();
        v.extend(self.encoder.params_mut());
        v.extend(self.lstm.params_mut());
        v.extend(self.head.params_mut());
        v
    }
}

/// Everything the backward pass needs from one forward call.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    embed: EmbedCache<T>,
    encoder: EncoderCache<T>,
    lstm: LstmCache<T>,
    head: HeadCache<T>,
    pub logit: T,
}

impl<T> ForwardCache<T> {
    pub fn score_macs(&self) -> u64 {
        self.encoder.score_macs
    }
}

/// Pre-sigmoid logit for the final position of `w`, with the backward cache.
pub fn forward_logit<T: Scalar>(w: &FeatureWindow, theta: &ModelParams<T>) -> Result<(T, ForwardCache<T>)> {
    let start = w.n_pad();
    if start >= w.len() {
        return Err(Error::Contract("window has no real position".into()));
    }
    let (x, embed) = embed_forward(w, start, &theta.embed)?;
    let mask = vec![false; x.rows()];
    let (enc, encoder) = encoder_forward(&x, &mask, &theta.encoder, theta.config.n_heads)?;
    let (h, lstm) = lstm_forward(&enc, &theta.lstm)?;
    let (logit, head) = head_forward(&h, &theta.head)?;
    Ok((
        logit,
        ForwardCache {
            embed,
            encoder,
            lstm,
            head,
            logit,
        },
    ))
}

/// Predicted probability that the final question is answered correctly,
/// clamped strictly inside `(0, 1)`.
pub fn forward<T: Scalar>(w: &FeatureWindow, theta: &ModelParams<T>) -> Result<T> {
    forward_logit(w, theta).map(|(z, _)| probability(z))
}

pub fn probability<T: Scalar>(logit: T) -> T {
    let eps = T::epsilon();
    ops::sigmoid(logit).max(eps).min(T::one() - eps)
}

/// Accumulates `dLoss/dθ` for every parameter given `dLoss/dlogit`.
pub fn backward<T: Scalar>(cache: &ForwardCache<T>, theta: &mut ModelParams<T>, dlogit: T) -> Result<()> {
    let dh = head_backward(&cache.head, &mut theta.head, dlogit)?;
    let denc = lstm_backward(&cache.lstm, &mut theta.lstm, &dh)?;
    let dx = encoder_backward(&cache.encoder, &mut theta.encoder, &denc)?;
    embed_backward(&cache.embed, &mut theta.embed, &dx)
}

/// Parameters plus the cache of the most recent forward pass, for the
/// forward-then-backward training step.
#[derive(Clone, Debug)]
pub struct LastQueryModel<T> {
    pub params: ModelParams<T>,
    tape: Option<ForwardCache<T>>,
}

impl<T: Scalar> LastQueryModel<T> {
    pub fn new(params: ModelParams<T>) -> Self {
        Self { params, tape: None }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.params.config
    }

    /// Inference only; leaves the tape untouched.
    pub fn predict(&self, w: &FeatureWindow) -> Result<T> {
        forward(w, &self.params)
    }

    /// Forward pass that records the tape for [`Self::backward`]; returns the logit.
    pub fn forward(&mut self, w: &FeatureWindow) -> Result<T> {
        let (logit, cache) = forward_logit(w, &self.params)?;
        self.tape = Some(cache);
        Ok(logit)
    }

    /// Consumes the recorded tape.
    pub fn backward(&mut self, dlogit: T) -> Result<()> {
        let cache = self
            .tape
            .take()
            .ok_or(Error::State("backward called without a preceding forward"))?;
        backward(&cache, &mut self.params, dlogit)
    }

    pub fn zero_grads(&mut self) {
        self.params.zero_grads();
    }

    pub fn into_params(self) -> ModelParams<T> {
        self.params
    }
}
