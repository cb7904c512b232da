use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::features::{Interaction, UserHistory};
use crate::numcore::{sigmoid, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_questions: usize,
    pub min_interactions: usize,
    pub max_interactions: usize,
    /// Standard deviation of the per-step ability random walk.
    pub drift: f64,
    pub difficulty_mean: f64,
    /// Standard deviation of question difficulty.
    pub difficulty_spread: f64,
    /// Chance that a gap between two questions is a multi-day break.
    pub long_gap_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 2000,
            n_questions: 100,
            min_interactions: 20,
            max_interactions: 200,
            drift: 0.05,
            difficulty_mean: 0.0,
            difficulty_spread: 1.0,
            long_gap_rate: 0.02,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Argument(m));
        if self.n_users == 0 {
            return bad("n_users must be positive".into());
        }
        if self.n_questions == 0 || self.n_questions > u32::MAX as usize {
            return bad(format!("n_questions {} out of range", self.n_questions));
        }
        if self.min_interactions == 0 || self.min_interactions > self.max_interactions {
            return bad(format!(
                "interactions per user must satisfy 1 <= min ({}) <= max ({})",
                self.min_interactions, self.max_interactions
            ));
        }
        for (name, v) in [("drift", self.drift), ("difficulty_spread", self.difficulty_spread)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !self.difficulty_mean.is_finite() {
            return bad("difficulty_mean must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.long_gap_rate) {
            return bad(format!("long_gap_rate {} outside [0, 1]", self.long_gap_rate));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuestionMeta {
    pub question_id: u32,
    pub part: u8,
    pub difficulty: f64,
}

/// Latent state behind one generated answer.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthEvent {
    pub user_id: u64,
    pub event_index: usize,
    pub ability: f64,
    pub p_true: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub questions: Vec<QuestionMeta>,
    pub users: Vec<UserHistory>,
    /// Users in order, events in order within each user.
    pub truth: Vec<TruthEvent>,
}

impl SyntheticCorpus {
    pub fn n_events(&self) -> usize {
        self.users.iter().map(|u| u.len()).sum()
    }

    pub fn base_rate(&self) -> f64 {
        let hits: usize = self
            .users
            .iter()
            .flat_map(|u| &u.interactions)
            .filter(|i| i.answered_correctly)
            .count();
        hits as f64 / self.n_events().max(1) as f64
    }
}

const MEDIAN_GAP_MS: f64 = 45_000.0;
const MEDIAN_LONG_GAP_MS: f64 = 4.0 * 24.0 * 3600.0 * 1000.0;
const MEDIAN_ELAPSED_MS: f64 = 20_000.0;

/// Draws questions and users. Each user has its own generator stream, so a
/// user's history does not depend on how many users come before it.
pub fn generate(cfg: &SynthConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let root = Rng::new(cfg.seed);

    let mut qrng = root.fork(0);
    let questions: Vec<QuestionMeta> = (0..cfg.n_questions)
        .map(|q| QuestionMeta {
            question_id: q as u32,
            part: qrng.range_inclusive(1, 7) as u8,
            difficulty: qrng.normal(cfg.difficulty_mean, cfg.difficulty_spread),
        })
        .collect();

    let mut idrng = root.fork(1);
    let mut seen = HashSet::with_capacity(cfg.n_users);
    let ids: Vec<u64> = std::iter::from_fn(|| Some(idrng.next_u32() as u64))
        .filter(|id| seen.insert(*id))
        .take(cfg.n_users)
        .collect();

    let mut users = Vec::with_capacity(cfg.n_users);
    let mut truth = Vec::new();
    for (u, &user_id) in ids.iter().enumerate() {
        let mut rng = root.fork(2 + u as u64);
        let n = rng.range_inclusive(cfg.min_interactions as u64, cfg.max_interactions as u64) as usize;
        let mut ability = rng.normal(0.0, 1.0);
        let mut t = 0u64;
        let mut interactions = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                let median = if rng.bernoulli(cfg.long_gap_rate) {
                    MEDIAN_LONG_GAP_MS
                } else {
                    MEDIAN_GAP_MS
                };
                t += (rng.log_normal(median.ln(), 1.0).round() as u64).max(1);
            }
            let q = &questions[rng.below(cfg.n_questions)];
            let p = sigmoid(ability - q.difficulty);
            let prior_elapsed_ms = (k > 0).then(|| rng.log_normal(MEDIAN_ELAPSED_MS.ln(), 0.6).round() as u64);
            interactions.push(Interaction {
                user_id,
                question_id: q.question_id,
                part: q.part,
                timestamp_ms: t,
                answered_correctly: rng.bernoulli(p),
                prior_elapsed_ms,
            });
            truth.push(TruthEvent {
                user_id,
                event_index: k,
                ability,
                p_true: p,
            });
            ability += rng.normal(0.0, cfg.drift);
        }
        users.push(UserHistory { user_id, interactions });
    }
    Ok(SyntheticCorpus { questions, users, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::TDIFF_CAP_MS;
    use crate::training::auc;

    fn small() -> SynthConfig {
        SynthConfig {
            n_users: 50,
            n_questions: 20,
            seed: 11,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_under_seed() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let other = SynthConfig { seed: 12, ..small() };
        assert_ne!(generate(&small()).unwrap().users, generate(&other).unwrap().users);
    }

    #[test]
    fn structural_invariants() {
        let c = generate(&small()).unwrap();
        assert_eq!(c.truth.len(), c.n_events());
        let mut long_gaps = 0;
        for u in &c.users {
            assert!((20..=200).contains(&u.len()));
            assert!(u.interactions[0].prior_elapsed_ms.is_none());
            for pair in u.interactions.windows(2) {
                assert!(pair[1].timestamp_ms > pair[0].timestamp_ms);
                assert!(pair[1].prior_elapsed_ms.is_some());
                long_gaps += (pair[1].timestamp_ms - pair[0].timestamp_ms > TDIFF_CAP_MS) as usize;
            }
            for i in &u.interactions {
                assert!((1..=7).contains(&i.part));
                assert_eq!(i.part, c.questions[i.question_id as usize].part);
            }
        }
        assert!(long_gaps > 0, "no gap exceeds the clip");
    }

    #[test]
    fn easy_questions_are_answered() {
        let cfg = SynthConfig {
            n_users: 100,
            min_interactions: 100,
            max_interactions: 100,
            drift: 0.0,
            difficulty_mean: -10.0,
            difficulty_spread: 0.0,
            ..small()
        };
        let c = generate(&cfg).unwrap();
        assert_eq!(c.n_events(), 10_000);
        assert!(c.base_rate() >= 0.99, "{}", c.base_rate());
    }

    #[test]
    fn symmetric_difficulty_gives_balanced_labels() {
        let cfg = SynthConfig {
            n_users: 300,
            drift: 0.0,
            ..small()
        };
        let r = generate(&cfg).unwrap().base_rate();
        assert!((0.4..=0.6).contains(&r), "{r}");
    }

    #[test]
    fn default_corpus_oracle_auc() {
        let c = generate(&SynthConfig::default()).unwrap();
        let scores: Vec<f64> = c.truth.iter().map(|t| t.p_true).collect();
        let labels: Vec<u8> = c.users.iter().flat_map(|u| &u.interactions).map(|i| i.answered_correctly as u8).collect();
        let a = auc(&scores, &labels).unwrap();
        assert!(a >= 0.75, "oracle AUC {a}");
    }

    #[test]
    fn rejects_bad_config() {
        for cfg in [
            SynthConfig { n_users: 0, ..small() },
            SynthConfig { n_questions: 0, ..small() },
            SynthConfig { min_interactions: 5, max_interactions: 4, ..small() },
            SynthConfig { drift: -1.0, ..small() },
        ] {
            assert!(matches!(generate(&cfg), Err(Error::Argument(_))));
        }
    }
}
