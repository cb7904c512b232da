use crate::error::{Error, Result};

/// Training share of users.
pub const TRAIN_RATIO: f64 = 0.95;

/// Sorts ids ascending; the first `floor(ratio · n)` go to training and the
/// rest to validation. Each side keeps at least one id, so `n ≥ 2` is
/// required.
pub fn split_users(user_ids: &[u64], ratio: f64) -> Result<(Vec<u64>, Vec<u64>)> {
    let mut ids = user_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 distinct users to split, got {}",
            ids.len()
        )));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Argument(format!("split ratio {ratio} outside [0, 1]")));
    }
    let n = ids.len();
    let n_train = ((ratio * n as f64).floor() as usize).clamp(1, n - 1);
    let valid = ids.split_off(n_train);
    Ok((ids, valid))
}
