//! Ranked link-prediction evaluation.
//!
//! Each positive is ranked against its negatives with mid-rank tie handling:
//! `rank = 1 + #{neg > pos} + 0.5 * #{neg == pos}`. MRR averages `1/rank`,
//! Hits@K is the fraction of positives with `rank <= K`.

mod analysis;
pub mod tables;

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

pub use analysis::{
    avg_gate_weights_per_group, combination_grid, group_breakdown, overlap_matrix, CombinationGrid, GateWeightGroups,
    GroupKey, GroupReport, GroupSpec, MethodScores, OverlapMatrix,
};

pub const DEFAULT_KS: [usize; 6] = [1, 3, 10, 20, 50, 100];

pub fn rank_of_positive(pos: f64, negs: &[f64]) -> f64 {
    let mut greater = 0usize;
    let mut equal = 0usize;
    for &n in negs {
        if n > pos {
            greater += 1;
        } else if n == pos {
            equal += 1;
        }
    }
    mid_rank(greater, equal)
}

#[inline]
fn mid_rank(greater: usize, equal: usize) -> f64 {
    1.0 + greater as f64 + 0.5 * equal as f64
}

/// Negative scores laid out like the underlying [`crate::graph::NegativeSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum NegScores {
    Shared(Vec<f64>),
    PerPositive(Vec<Vec<f64>>),
}

impl NegScores {
    /// Rebuilds the layout of `like` from a flat score list in
    /// [`crate::graph::NegativeSet::all_pairs`] order.
    pub fn from_flat(like: &crate::graph::NegativeSet, flat: Vec<f64>) -> Result<NegScores> {
        if flat.len() != like.len() {
            return Err(Error::DimMismatch {
                expected: like.len(),
                found: flat.len(),
            });
        }
        Ok(match like {
            crate::graph::NegativeSet::Shared(_) => NegScores::Shared(flat),
            crate::graph::NegativeSet::PerPositive(lists) => {
                let mut it = flat.into_iter();
                NegScores::PerPositive(lists.iter().map(|l| it.by_ref().take(l.len()).collect()).collect())
            }
        })
    }

    /// Elementwise combination of two identically shaped layouts.
    pub fn zip_with(&self, other: &NegScores, f: impl Fn(f64, f64) -> f64) -> Result<NegScores> {
        let zip = |a: &[f64], b: &[f64]| -> Result<Vec<f64>> {
            if a.len() != b.len() {
                return Err(Error::DimMismatch {
                    expected: a.len(),
                    found: b.len(),
                });
            }
            Ok(a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
        };
        match (self, other) {
            (NegScores::Shared(a), NegScores::Shared(b)) => Ok(NegScores::Shared(zip(a, b)?)),
            (NegScores::PerPositive(a), NegScores::PerPositive(b)) if a.len() == b.len() => Ok(NegScores::PerPositive(
                a.iter().zip(b).map(|(x, y)| zip(x, y)).collect::<Result<_>>()?,
            )),
            _ => Err(Error::InvalidConfig("negative score layouts differ".into())),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> NegScores {
        match self {
            NegScores::Shared(a) => NegScores::Shared(a.iter().map(|&x| f(x)).collect()),
            NegScores::PerPositive(a) => {
                NegScores::PerPositive(a.iter().map(|l| l.iter().map(|&x| f(x)).collect()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    /// Mid-rank of each positive, in positive order.
    pub ranks: Vec<f64>,
    pub mrr: f64,
    pub hits: BTreeMap<usize, f64>,
}

impl RankingReport {
    pub fn from_ranks(ranks: Vec<f64>, ks: &[usize]) -> RankingReport {
        let n = ranks.len() as f64;
        let mrr = ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n;
        let hits = ks
            .iter()
            .map(|&k| (k, ranks.iter().filter(|&&r| r <= k as f64).count() as f64 / n))
            .collect();
        RankingReport { ranks, mrr, hits }
    }

    /// Hits@K for any `k`, whether or not it was requested up front.
    pub fn hits_at(&self, k: usize) -> f64 {
        self.hits
            .get(&k)
            .copied()
            .unwrap_or_else(|| self.ranks.iter().filter(|&&r| r <= k as f64).count() as f64 / self.ranks.len() as f64)
    }
}

fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(p) => Err(Error::NonFiniteScore { line: p + 1 }),
        None => Ok(()),
    }
}

pub fn evaluate(pos: &[f64], neg: &NegScores, ks: &[usize]) -> Result<RankingReport> {
    if pos.is_empty() {
        return Err(Error::EmptyPositives);
    }
    check_finite(pos)?;
    let ranks = match neg {
        NegScores::Shared(negs) => {
            if negs.is_empty() {
                return Err(Error::EmptyNegatives);
            }
            check_finite(negs)?;
            let mut sorted = negs.clone();
            sorted.sort_unstable_by(f64::total_cmp);
            pos.iter()
                .map(|&p| {
                    let below = sorted.partition_point(|&x| x < p);
                    let upto = sorted.partition_point(|&x| x <= p);
                    mid_rank(sorted.len() - upto, upto - below)
                })
                .collect()
        }
        NegScores::PerPositive(lists) => {
            if lists.len() != pos.len() {
                return Err(Error::DimMismatch {
                    expected: pos.len(),
                    found: lists.len(),
                });
            }
            let mut ranks = Vec::with_capacity(pos.len());
            for (&p, l) in pos.iter().zip(lists) {
                if l.is_empty() {
                    return Err(Error::EmptyNegatives);
                }
                check_finite(l)?;
                ranks.push(rank_of_positive(p, l));
            }
            ranks
        }
    };
    Ok(RankingReport::from_ranks(ranks, ks))
}

/// Indices of positives ranked within the top `k`.
pub fn correct_set(report: &RankingReport, k: usize) -> BTreeSet<usize> {
    report
        .ranks
        .iter()
        .enumerate()
        .filter(|(_, &r)| r <= k as f64)
        .map(|(i, _)| i)
        .collect()
}

/// `|a ∩ b| / |a ∪ b|`, taken to be 1 when both sets are empty.
pub fn jaccard_overlap(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
