use super::split::{split_users, TRAIN_RATIO};
use crate::error::{Error, Result};
use crate::features::{window_ends, FeatureWindow, UserFeatures, UserHistory};

/// How windows are cut from user histories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetConfig {
    pub seq_len: usize,
    /// Distance between consecutive training targets of one user.
    pub train_stride: usize,
    /// Distance between consecutive validation targets of one user.
    pub valid_stride: usize,
    pub split_ratio: f64,
}

impl DatasetConfig {
    pub fn new(seq_len: usize) -> Self {
        Self {
            seq_len,
            train_stride: (seq_len / 2).max(1),
            valid_stride: 4.min(seq_len).max(1),
            split_ratio: TRAIN_RATIO,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub train: Vec<FeatureWindow>,
    pub valid: Vec<FeatureWindow>,
    pub train_users: Vec<u64>,
    pub valid_users: Vec<u64>,
}

/// Every window of `users` whose id is in `ids`, targets spaced by `stride`.
pub fn windows_for(users: &[UserHistory], ids: &[u64], seq_len: usize, stride: usize) -> Result<Vec<FeatureWindow>> {
    if stride == 0 {
        return Err(Error::Argument("window stride must be positive".into()));
    }
    let mut out = Vec::new();
    for u in users {
        if ids.binary_search(&u.user_id).is_err() || u.interactions.is_empty() {
            continue;
        }
        let feats = UserFeatures::from_interactions(&u.interactions)?;
        for end in window_ends(feats.len(), stride) {
            out.push(feats.window(end, seq_len)?);
        }
    }
    Ok(out)
}

/// Splits users by id and builds training and validation windows.
pub fn build_dataset(users: &[UserHistory], cfg: &DatasetConfig) -> Result<Dataset> {
    let ids: Vec<u64> = users.iter().map(|u| u.user_id).collect();
    let (train_users, valid_users) = split_users(&ids, cfg.split_ratio)?;
    Ok(Dataset {
        train: windows_for(users, &train_users, cfg.seq_len, cfg.train_stride)?,
        valid: windows_for(users, &valid_users, cfg.seq_len, cfg.valid_stride)?,
        train_users,
        valid_users,
    })
}
