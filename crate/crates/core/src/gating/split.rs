use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{NegativeSet, Pair};
use crate::nn::{derive_seed, seeded_rng};

/// Fraction of validation positives handed to gate training by default.
pub const DEFAULT_SPLIT_RATIO: f64 = 0.9;

/// Positives with their negatives, laid out like one split of an [`crate::graph::EdgeSplit`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    pub pos: Vec<Pair>,
    pub neg: NegativeSet,
}

impl EvalSet {
    /// Positives followed by every negative, the order scores are computed in.
    pub fn all_pairs(&self) -> Vec<Pair> {
        let mut out = self.pos.clone();
        out.extend(self.neg.all_pairs());
        out
    }
}

fn cut(n: usize, ratio: f64) -> usize {
    (ratio * n as f64).round() as usize
}

/// Deterministic shuffled partition of the validation split into
/// (gate-train, gate-val). Shared negatives are split at the same ratio;
/// per-positive negatives travel with their positive.
pub fn split_validation(
    valid_pos: &[Pair],
    valid_neg: &NegativeSet,
    ratio: f64,
    seed: u64,
) -> Result<(EvalSet, EvalSet)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut rng = seeded_rng(derive_seed(seed, "split-validation"));
    let n = valid_pos.len();
    let n_train = cut(n, ratio);
    if n_train == 0 || n_train == n {
        return Err(Error::EmptySplit {
            train: n_train,
            val: n - n_train.min(n),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let (tr, va) = order.split_at(n_train);
    let take = |idx: &[usize]| idx.iter().map(|&k| valid_pos[k]).collect::<Vec<_>>();

    let (neg_train, neg_val) = match valid_neg {
        NegativeSet::Shared(negs) => {
            let k = cut(negs.len(), ratio);
            if k == 0 || k == negs.len() {
                return Err(Error::EmptySplit {
                    train: k,
                    val: negs.len() - k,
                });
            }
            let mut shuffled = negs.clone();
            shuffled.shuffle(&mut rng);
            let val = shuffled.split_off(k);
            (NegativeSet::Shared(shuffled), NegativeSet::Shared(val))
        }
        NegativeSet::PerPositive(lists) => {
            if lists.len() != n {
                return Err(Error::NegCountMismatch {
                    set: "valid".into(),
                    expected: n,
                    found: lists.len(),
                });
            }
            let pick = |idx: &[usize]| idx.iter().map(|&k| lists[k].clone()).collect();
            (NegativeSet::PerPositive(pick(tr)), NegativeSet::PerPositive(pick(va)))
        }
    };
    Ok((
        EvalSet {
            pos: take(tr),
            neg: neg_train,
        },
        EvalSet {
            pos: take(va),
            neg: neg_val,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos(n: usize) -> Vec<Pair> {
        (0..n).map(|k| (k, k + 100)).collect()
    }

    #[test]
    fn ratio_convention() {
        let negs = NegativeSet::Shared((0..20).map(|k| (k, k + 50)).collect());
        let (tr, va) = split_validation(&pos(10), &negs, 0.9, 1).unwrap();
        assert_eq!((tr.pos.len(), va.pos.len()), (9, 1));
        assert_eq!((tr.neg.len(), va.neg.len()), (18, 2));

        let negs = NegativeSet::Shared(vec![(0, 9), (1, 9)]);
        let (tr, va) = split_validation(&pos(2), &negs, 0.5, 1).unwrap();
        assert_eq!((tr.pos.len(), va.pos.len()), (1, 1));
    }

    #[test]
    fn partition_is_deterministic_and_complete() {
        let p = pos(37);
        let negs = NegativeSet::PerPositive(p.iter().map(|&(u, v)| vec![(u, v + 1), (u, v + 2)]).collect());
        let a = split_validation(&p, &negs, 0.8, 5).unwrap();
        let b = split_validation(&p, &negs, 0.8, 5).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<Pair> = a.0.pos.iter().chain(&a.1.pos).copied().collect();
        all.sort_unstable();
        assert_eq!(all, p);
        // negatives follow their positive
        if let NegativeSet::PerPositive(lists) = &a.1.neg {
            for (&(u, v), l) in a.1.pos.iter().zip(lists) {
                assert_eq!(l, &vec![(u, v + 1), (u, v + 2)]);
            }
        } else {
            panic!("layout changed");
        }
        assert_ne!(a, split_validation(&p, &negs, 0.8, 6).unwrap());
    }

    #[test]
    fn rejects_empty_sides() {
        let negs = NegativeSet::Shared(vec![(0, 9), (1, 9)]);
        assert!(matches!(
            split_validation(&pos(1), &negs, 0.9, 0),
            Err(Error::EmptySplit { .. })
        ));
        assert!(matches!(
            split_validation(&pos(3), &negs, 0.99, 0),
            Err(Error::EmptySplit { .. })
        ));
        assert!(split_validation(&pos(3), &negs, 1.0, 0).is_err());
    }
}
