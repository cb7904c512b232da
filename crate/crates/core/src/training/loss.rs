use crate::numcore::sigmoid;

/// Binary cross-entropy of a logit against a 0/1 label, with
/// `dLoss/dlogit = sigmoid(z) − y`. Written as softplus so it never takes
/// `log(0)`.
pub fn bce_with_logit(logit: f64, label: u8) -> (f64, f64) {
    let y = label as f64;
    let loss = logit.max(0.0) - logit * y + (-logit.abs()).exp().ln_1p();
    (loss, sigmoid(logit) - y)
}

/// Binary cross-entropy of a probability, evaluated through its logit.
pub fn bce_loss(p: f64, label: u8) -> f64 {
    let logit = p.ln() - (-p).ln_1p();
    bce_with_logit(logit, label).0
}
