use super::interaction::Interaction;
use super::transform::{compute_tdiff, normalize_continuous, transform_elapsed};
use crate::error::{Error, Result};

pub const PAD: u8 = 0;
pub const TOKEN_INCORRECT: u8 = 1;
pub const TOKEN_CORRECT: u8 = 2;
/// Correctness token at the position being predicted.
pub const TOKEN_UNKNOWN: u8 = 3;

/// Fixed-length, left-padded model input predicting the correctness of its
/// final position.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureWindow {
    pub user_id: u64,
    /// Index of the predicted interaction within the user's history.
    pub end_index: usize,
    /// Question tokens: `question_id + 1`, 0 for padding.
    pub question: Vec<u32>,
    pub part: Vec<u8>,
    pub correctness: Vec<u8>,
    pub elapsed: Vec<f64>,
    pub tdiff: Vec<f64>,
    /// `true` on padding.
    pub pad_mask: Vec<bool>,
    pub label: u8,
}

impl FeatureWindow {
    pub fn len(&self) -> usize {
        self.question.len()
    }

    pub fn is_empty(&self) -> bool {
        self.question.is_empty()
    }

    pub fn n_pad(&self) -> usize {
        self.pad_mask.iter().take_while(|&&m| m).count()
    }

    pub fn real_len(&self) -> usize {
        self.len() - self.n_pad()
    }

    /// The target question id (zero-based).
    pub fn target_question(&self) -> u32 {
        self.question[self.len() - 1] - 1
    }

    /// Checks the layout invariants: contiguous pad prefix, real last slot
    /// holding the UNKNOWN token, zeroed pad features, continuous values in
    /// `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let lens = [
            self.part.len(),
            self.correctness.len(),
            self.elapsed.len(),
            self.tdiff.len(),
            self.pad_mask.len(),
        ];
        if n == 0 || lens.iter().any(|&l| l != n) {
            return Err(Error::Contract("window channels have inconsistent lengths".into()));
        }
        let n_pad = self.n_pad();
        if n_pad == n {
            return Err(Error::Contract("window final position is padding".into()));
        }
        if self.pad_mask[n_pad..].iter().any(|&m| m) {
            return Err(Error::Contract("padding after a real position".into()));
        }
        for k in 0..n_pad {
            if self.question[k] != 0
                || self.part[k] != PAD
                || self.correctness[k] != PAD
                || self.elapsed[k] != 0.0
                || self.tdiff[k] != 0.0
            {
                return Err(Error::Contract(format!("pad position {k} carries data")));
            }
        }
        if self.correctness[n - 1] != TOKEN_UNKNOWN {
            return Err(Error::Contract("query position correctness is not UNKNOWN".into()));
        }
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        if !self.elapsed.iter().all(unit) || !self.tdiff.iter().all(unit) {
            return Err(Error::Contract("continuous feature outside [0, 1]".into()));
        }
        if self.label > 1 {
            return Err(Error::Contract("label must be 0 or 1".into()));
        }
        Ok(())
    }
}

/// Per-user feature channels computed once over the whole history, so that
/// many windows can be cut from it cheaply.
#[derive(Clone, Debug)]
pub struct UserFeatures {
    pub user_id: u64,
    question: Vec<u32>,
    part: Vec<u8>,
    correct: Vec<bool>,
    /// Normalized current-question elapsed time (shifted prior elapsed).
    elapsed: Vec<f64>,
    tdiff: Vec<f64>,
}

impl UserFeatures {
    pub fn from_interactions(history: &[Interaction]) -> Result<Self> {
        let first = history
            .first()
            .ok_or_else(|| Error::Argument("empty interaction history".into()))?;
        let user_id = first.user_id;
        for (k, it) in history.iter().enumerate() {
            if it.user_id != user_id {
                return Err(Error::Data(format!(
                    "history of user {user_id} contains user {} at index {k}",
                    it.user_id
                )));
            }
            if !(1..=7).contains(&it.part) {
                return Err(Error::Data(format!(
                    "user {user_id}: part {} out of range at index {k}",
                    it.part
                )));
            }
        }
        let prior: Vec<_> = history.iter().map(|i| i.prior_elapsed_ms).collect();
        let stamps: Vec<_> = history.iter().map(|i| i.timestamp_ms).collect();
        let elapsed_ms = transform_elapsed(&prior);
        let tdiff_ms = compute_tdiff(user_id, &stamps)?;
        let (elapsed, tdiff) = elapsed_ms
            .iter()
            .zip(&tdiff_ms)
            .map(|(&e, &t)| normalize_continuous(e, t))
            .unzip();
        Ok(Self {
            user_id,
            question: history.iter().map(|i| i.question_id).collect(),
            part: history.iter().map(|i| i.part).collect(),
            correct: history.iter().map(|i| i.answered_correctly).collect(),
            elapsed,
            tdiff,
        })
    }

    pub fn len(&self) -> usize {
        self.question.len()
    }

    pub fn is_empty(&self) -> bool {
        self.question.is_empty()
    }

    /// Window of length `seq_len` whose final slot is interaction `end_index`.
    pub fn window(&self, end_index: usize, seq_len: usize) -> Result<FeatureWindow> {
        if seq_len == 0 {
            return Err(Error::Argument("window length must be positive".into()));
        }
        if end_index >= self.len() {
            return Err(Error::Argument(format!(
                "end index {end_index} out of range for history of {}",
                self.len()
            )));
        }
        let take = seq_len.min(end_index + 1);
        let start = end_index + 1 - take;
        let n_pad = seq_len - take;

        let mut w = FeatureWindow {
            user_id: self.user_id,
            end_index,
            question: vec![0; seq_len],
            part: vec![PAD; seq_len],
            correctness: vec![PAD; seq_len],
            elapsed: vec![0.0; seq_len],
            tdiff: vec![0.0; seq_len],
            pad_mask: vec![true; seq_len],
            label: self.correct[end_index] as u8,
        };
        for (slot, k) in (n_pad..seq_len).zip(start..=end_index) {
            w.question[slot] = self.question[k] + 1;
            w.part[slot] = self.part[k];
            w.correctness[slot] = if self.correct[k] {
                TOKEN_CORRECT
            } else {
                TOKEN_INCORRECT
            };
            w.elapsed[slot] = self.elapsed[k];
            w.tdiff[slot] = self.tdiff[k];
            w.pad_mask[slot] = false;
        }
        // Neither the answer nor the solve time of the predicted question is
        // known yet.
        w.correctness[seq_len - 1] = TOKEN_UNKNOWN;
        w.elapsed[seq_len - 1] = 0.0;
        Ok(w)
    }
}

/// Builds the window ending at `end_index` from a chronological history.
pub fn build_window(history: &[Interaction], end_index: usize, seq_len: usize) -> Result<FeatureWindow> {
    if history.is_empty() {
        return Err(Error::Argument("empty interaction history".into()));
    }
    if end_index >= history.len() {
        return Err(Error::Argument(format!(
            "end index {end_index} out of range for history of {}",
            history.len()
        )));
    }
    UserFeatures::from_interactions(&history[..=end_index])?.window(end_index, seq_len)
}

/// Prediction targets for a history of `n` events: the last event, then every
/// `stride` events further back. Returned in ascending order.
pub fn window_ends(n: usize, stride: usize) -> Vec<usize> {
    assert!(stride > 0, "stride must be positive");
    if n == 0 {
        return Vec::new();
    }
    let mut ends: Vec<usize> = (0..=(n - 1) / stride).map(|i| n - 1 - i * stride).collect();
    ends.reverse();
    ends
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn history(n: usize) -> Vec<Interaction> {
        (0..n)
            .map(|k| Interaction {
                user_id: 5,
                question_id: k as u32 * 3,
                part: (k % 7) as u8 + 1,
                timestamp_ms: k as u64 * 60_000,
                answered_correctly: k % 2 == 0,
                prior_elapsed_ms: if k == 0 { None } else { Some(10_000 + k as u64) },
            })
            .collect()
    }

    #[test]
    fn short_history_is_left_padded() {
        let w = build_window(&history(2), 1, 4).unwrap();
        assert_eq!(w.pad_mask, vec![true, true, false, false]);
        assert_eq!(w.correctness, vec![0, 0, TOKEN_CORRECT, TOKEN_UNKNOWN]);
        assert_eq!(w.question, vec![0, 0, 1, 4]);
        assert_eq!(w.label, 0);
        w.validate().unwrap();
    }

    #[test]
    fn long_history_keeps_most_recent() {
        let h = history(5);
        let w = build_window(&h, 4, 4).unwrap();
        assert_eq!(w.pad_mask, vec![false; 4]);
        let ids: Vec<u32> = h[1..].iter().map(|i| i.question_id + 1).collect();
        assert_eq!(w.question, ids);
        assert_eq!(w.label, 1);
    }

    #[test]
    fn single_interaction_window() {
        let w = build_window(&history(1), 0, 1).unwrap();
        assert_eq!(w.pad_mask, vec![false]);
        assert_eq!(w.correctness, vec![TOKEN_UNKNOWN]);
        assert_eq!(w.elapsed, vec![0.0]);
    }

    #[test]
    fn final_elapsed_is_sentinel_even_mid_history() {
        let h = history(6);
        let w = build_window(&h, 3, 4).unwrap();
        // position 2 of the window is interaction 2, whose solve time is the
        // prior elapsed of interaction 3
        assert_eq!(w.elapsed[2], 10_003.0 / 300_000.0);
        assert_eq!(w.elapsed[3], 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(build_window(&[], 0, 4), Err(Error::Argument(_))));
        assert!(matches!(build_window(&history(2), 2, 4), Err(Error::Argument(_))));
        let mut bad = history(3);
        bad[1].part = 9;
        assert!(matches!(build_window(&bad, 2, 4), Err(Error::Data(_))));
    }

    #[test]
    fn ends_step_back_from_last() {
        assert_eq!(window_ends(10, 4), vec![1, 5, 9]);
        assert_eq!(window_ends(3, 64), vec![2]);
        assert_eq!(window_ends(4, 1), vec![0, 1, 2, 3]);
        assert!(window_ends(0, 3).is_empty());
    }

    proptest! {
        #[test]
        fn window_layout_invariants(
            n in 1usize..80,
            seq_len in 1usize..40,
            seed in any::<u64>(),
        ) {
            let mut rng = crate::numcore::Rng::new(seed);
            let mut t = 0u64;
            let h: Vec<Interaction> = (0..n).map(|k| {
                t += rng.range_inclusive(0, 400_000_000);
                Interaction {
                    user_id: 1,
                    question_id: rng.below(50) as u32,
                    part: rng.range_inclusive(1, 7) as u8,
                    timestamp_ms: t,
                    answered_correctly: rng.bernoulli(0.6),
                    prior_elapsed_ms: if k == 0 || rng.bernoulli(0.1) { None } else { Some(rng.range_inclusive(0, 900_000)) },
                }
            }).collect();
            let end = rng.below(n);
            let w = build_window(&h, end, seq_len).unwrap();
            prop_assert!(w.validate().is_ok());
            prop_assert_eq!(w.len(), seq_len);
            prop_assert_eq!(w.real_len(), seq_len.min(end + 1));
            prop_assert!(!w.pad_mask[seq_len - 1]);
            prop_assert_eq!(w.correctness[seq_len - 1], TOKEN_UNKNOWN);
            prop_assert_eq!(w.label, h[end].answered_correctly as u8);
            prop_assert_eq!(w.target_question(), h[end].question_id);
        }
    }
}
