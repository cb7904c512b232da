/// One student answering one question.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interaction {
    pub user_id: u64,
    /// Zero-based question id, `< n_questions`.
    pub question_id: u32,
    /// Question part, 1..=7.
    pub part: u8,
    pub timestamp_ms: u64,
    pub answered_correctly: bool,
    /// Time the user spent on the *previous* question; missing for the first.
    pub prior_elapsed_ms: Option<u64>,
}

/// A user's interactions in chronological (log) order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserHistory {
    pub user_id: u64,
    pub interactions: Vec<Interaction>,
}

impl UserHistory {
    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }
}
