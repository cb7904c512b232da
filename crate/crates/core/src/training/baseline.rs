use std::collections::HashMap;

use crate::features::{FeatureWindow, UserHistory};

/// Predicts the training-set correctness rate of the target question,
/// falling back to the global rate for unseen questions.
#[derive(Clone, Debug)]
pub struct QuestionMeanBaseline {
    rates: HashMap<u32, f64>,
    global: f64,
}

impl QuestionMeanBaseline {
    /// Fits on every interaction of the users whose ids are listed.
    pub fn fit(users: &[UserHistory], train_ids: &[u64]) -> Self {
        let mut counts: HashMap<u32, (u64, u64)> = HashMap::new();
        let (mut hits, mut total) = (0u64, 0u64);
        for u in users.iter().filter(|u| train_ids.binary_search(&u.user_id).is_ok()) {
            for it in &u.interactions {
                let e = counts.entry(it.question_id).or_default();
                e.0 += it.answered_correctly as u64;
                e.1 += 1;
                hits += it.answered_correctly as u64;
                total += 1;
            }
        }
        let global = if total == 0 { 0.5 } else { hits as f64 / total as f64 };
        let rates = counts.into_iter().map(|(q, (h, n))| (q, h as f64 / n as f64)).collect();
        Self { rates, global }
    }

    pub fn predict_question(&self, question_id: u32) -> f64 {
        self.rates.get(&question_id).copied().unwrap_or(self.global)
    }

    pub fn predict(&self, w: &FeatureWindow) -> f64 {
        self.predict_question(w.target_question())
    }
}
