//! ROC AUC by rank sums with midranks for ties.

use crate::error::{Error, Result};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. `O(n log n)`.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Argument("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::MetricUndefined("AUC needs both positive and negative labels"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // sum of 1-based midranks over positives
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_run = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        pos_rank_sum += midrank * pos_in_run as f64;
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    let u = pos_rank_sum - n_pos_f * (n_pos_f + 1.0) / 2.0;
    Ok(u / (n_pos_f * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Rng;

    fn brute_force(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut pairs = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    if si > sj {
                        num += 1.0;
                    } else if si == sj {
                        num += 0.5;
                    }
                }
            }
        }
        num / pairs
    }

    #[test]
    fn examples() {
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.9], &[1, 0]).unwrap(), 0.0);
        assert_eq!(brute_force(&[0.5, 0.5, 0.2], &[1, 0, 0]), 0.75);
        assert_eq!(auc(&[0.5, 0.5, 0.2], &[1, 0, 0]).unwrap(), 0.75);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::MetricUndefined(_))));
        assert!(matches!(auc(&[0.1, 0.2], &[0, 0]), Err(Error::MetricUndefined(_))));
        assert!(auc(&[0.1], &[0, 1]).is_err());
    }

    #[test]
    fn matches_pair_counting_with_ties() {
        let mut rng = Rng::new(17);
        let mut checked = 0;
        while checked < 200 {
            let n = 2 + rng.below(199);
            // coarse grid forces many ties
            let levels = 1 + rng.below(12);
            let scores: Vec<f64> = (0..n).map(|_| rng.below(levels) as f64 / levels as f64).collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.bernoulli(0.4) as u8).collect();
            if labels.iter().all(|&y| y == labels[0]) {
                continue;
            }
            assert_eq!(auc(&scores, &labels).unwrap(), brute_force(&scores, &labels));
            checked += 1;
        }
    }

    #[test]
    fn invariant_under_increasing_transform() {
        let mut rng = Rng::new(18);
        for _ in 0..100 {
            let n = 2 + rng.below(150);
            let scores: Vec<f64> = (0..n).map(|_| rng.below(20) as f64 * 0.05).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.bernoulli(0.5) as u8).collect();
            labels[0] = 0;
            labels[1] = 1;
            let moved: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 7.0).collect();
            assert_eq!(auc(&scores, &labels).unwrap(), auc(&moved, &labels).unwrap());
        }
    }
}
