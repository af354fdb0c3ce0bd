use crate::error::{Error, Result};

/// Above this many rows the rank-sum formula replaces explicit pair counting.
const PAIR_COUNT_LIMIT: usize = 10_000;

fn class_counts(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "auc",
            expected: (scores.len(), 1),
            got: (labels.len(), 1),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedAuc {
            positives,
            negatives,
        });
    }
    Ok((positives, negatives))
}

/// Mann–Whitney AUC: `(wins + ½·ties) / (P·N)` over positive/negative pairs.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() <= PAIR_COUNT_LIMIT {
        auc_by_pairs(scores, labels)
    } else {
        auc_by_ranks(scores, labels)
    }
}

/// Exact `O(P·N)` pair counting.
pub fn auc_by_pairs(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (p, n) = class_counts(scores, labels)?;
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l != 1).map(|(s, _)| *s).collect();
    // doubled counts stay integral
    let mut twice_wins: u64 = 0;
    for &a in &pos {
        for &b in &neg {
            twice_wins += match a.partial_cmp(&b) {
                Some(std::cmp::Ordering::Greater) => 2,
                Some(std::cmp::Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    Ok(twice_wins as f64 / (2.0 * p as f64 * n as f64))
}

/// Rank-sum form with mid-ranks for ties, `O(n log n)`.
pub fn auc_by_ranks(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (p, n) = class_counts(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // ranks are 1-based; a tie group [i, j) shares rank (i + 1 + j) / 2
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let twice_mid = (i + 1 + j) as u64;
        let pos_in_group = idx[i..j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        twice_rank_sum += twice_mid * pos_in_group;
        i = j;
    }
    let p64 = p as f64;
    let u = twice_rank_sum as f64 / 2.0 - p64 * (p64 + 1.0) / 2.0;
    Ok(u / (p64 * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking() {
        assert_eq!(auc(&[0.9, 0.1], &[1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn all_ties_is_half() {
        assert_eq!(auc(&[2.0; 6], &[1, 0, 1, 0, 0, 0]).unwrap(), 0.5);
        assert_eq!(auc_by_ranks(&[2.0; 6], &[1, 0, 1, 0, 0, 0]).unwrap(), 0.5);
    }

    #[test]
    fn pair_counting_example() {
        // (3 vs 2) win, (1 vs 2) loss
        assert_eq!(auc(&[3.0, 1.0, 2.0], &[1, 1, 0]).unwrap(), 0.5);
        assert_eq!(auc_by_ranks(&[3.0, 1.0, 2.0], &[1, 1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(
            auc(&[1.0, 2.0], &[1, 1]),
            Err(Error::UndefinedAuc { positives: 2, negatives: 0 })
        ));
        assert!(auc(&[1.0, 2.0], &[0, 0]).is_err());
        assert!(auc(&[1.0], &[0, 1]).is_err());
    }
}
