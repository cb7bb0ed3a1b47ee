use std::fmt;
use std::str::FromStr;

use super::{correct_set, evaluate, jaccard_overlap, NegScores, RankingReport};
use crate::error::{Error, Result};
use crate::gating::{GateInput, GateNetwork};
use crate::graph::{FeatureMatrix, Graph, Pair};
use crate::heuristics::{common_neighbors, feature_cosine, shortest_path, HeuristicConfig};

/// One method's scores on the evaluated positives and their negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodScores {
    pub name: String,
    pub pos: Vec<f64>,
    pub neg: NegScores,
}

impl MethodScores {
    pub fn report(&self, ks: &[usize]) -> Result<RankingReport> {
        evaluate(&self.pos, &self.neg, ks)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    pub names: Vec<String>,
    pub k: usize,
    /// Symmetric Jaccard coefficients of the correct sets.
    pub matrix: Vec<Vec<f64>>,
    /// Size of each method's correct set; zero marks the empty-set convention.
    pub correct_counts: Vec<usize>,
}

/// Pairwise Jaccard overlap of the positives each method ranks within `k`.
pub fn overlap_matrix(methods: &[MethodScores], k: usize) -> Result<OverlapMatrix> {
    let sets = methods
        .iter()
        .map(|m| Ok(correct_set(&m.report(&[])?, k)))
        .collect::<Result<Vec<_>>>()?;
    let n = sets.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a..n {
            let v = jaccard_overlap(&sets[a], &sets[b]);
            matrix[a][b] = v;
            matrix[b][a] = v;
        }
    }
    Ok(OverlapMatrix {
        names: methods.iter().map(|m| m.name.clone()).collect(),
        k,
        matrix,
        correct_counts: sets.iter().map(|s| s.len()).collect(),
    })
}

/// Heuristic used to bin pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Cn,
    /// Shortest-path distance, unreachable pairs capped at `sp_cap + 1`.
    Sp,
    Fcs,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Cn => "cn",
            GroupKey::Sp => "sp",
            GroupKey::Fcs => "fcs",
        }
    }

    /// The grouping value of each pair on `g`.
    pub fn values(
        self,
        g: &Graph,
        features: Option<&FeatureMatrix>,
        cfg: &HeuristicConfig,
        pairs: &[Pair],
    ) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        match self {
            GroupKey::Cn => pairs
                .par_iter()
                .map(|&(i, j)| common_neighbors(g, i, j).map(|c| c as f64))
                .collect(),
            GroupKey::Sp => pairs
                .par_iter()
                .map(|&(i, j)| shortest_path(g, i, j, cfg.sp_cap).map(|d| d.capped(cfg.sp_cap) as f64))
                .collect(),
            GroupKey::Fcs => {
                let f = features.ok_or(Error::NoFeatures)?;
                pairs.par_iter().map(|&(i, j)| feature_cosine(f, i, j)).collect()
            }
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<GroupKey> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cn" => Ok(GroupKey::Cn),
            "sp" => Ok(GroupKey::Sp),
            "fcs" => Ok(GroupKey::Fcs),
            _ => Err(Error::InvalidConfig(format!("unknown grouping heuristic {s:?}"))),
        }
    }
}

/// Thresholds splitting the value line into `edges.len() + 1` bins;
/// bin `b` holds values `v` with exactly `b` thresholds `<= v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub key: GroupKey,
    pub edges: Vec<f64>,
}

pub const DEFAULT_QUANTILES: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

impl GroupSpec {
    pub fn new(key: GroupKey, edges: Vec<f64>) -> Result<GroupSpec> {
        if edges.is_empty() {
            return Err(Error::InvalidConfig("group spec needs at least one edge".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "group edges must be finite and strictly ascending, got {edges:?}"
            )));
        }
        Ok(GroupSpec { key, edges })
    }

    /// CN value bins `[0,1) [1,3) [3,10) [10,30) [30,inf)`.
    pub fn default_cn() -> GroupSpec {
        GroupSpec {
            key: GroupKey::Cn,
            edges: vec![1.0, 3.0, 10.0, 30.0],
        }
    }

    /// Distance bins `1, 2, 3, 4, >=5 or unreachable`.
    pub fn default_sp() -> GroupSpec {
        GroupSpec {
            key: GroupKey::Sp,
            edges: vec![2.0, 3.0, 4.0, 5.0],
        }
    }

    /// Edges at the given quantiles of `values` (linear interpolation),
    /// nudged upward where needed to stay strictly ascending.
    pub fn quantile(key: GroupKey, values: &[f64], qs: &[f64]) -> Result<GroupSpec> {
        if values.is_empty() {
            return Err(Error::EmptyPositives);
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let last = (sorted.len() - 1) as f64;
        let mut edges: Vec<f64> = Vec::with_capacity(qs.len());
        for &q in qs {
            let pos = q.clamp(0.0, 1.0) * last;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let mut e = sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64);
            if let Some(&prev) = edges.last() {
                if e <= prev {
                    e = prev.next_up();
                }
            }
            edges.push(e);
        }
        GroupSpec::new(key, edges)
    }

    pub fn default_for(key: GroupKey, values: &[f64]) -> Result<GroupSpec> {
        match key {
            GroupKey::Cn => Ok(GroupSpec::default_cn()),
            GroupKey::Sp => Ok(GroupSpec::default_sp()),
            GroupKey::Fcs => GroupSpec::quantile(key, values, &DEFAULT_QUANTILES),
        }
    }

    pub fn num_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn bin(&self, v: f64) -> usize {
        self.edges.partition_point(|&e| e <= v)
    }

    /// Half-open value range `[lower, upper)` of bin `b`.
    pub fn bounds(&self, b: usize) -> (f64, f64) {
        let lower = if b == 0 { f64::NEG_INFINITY } else { self.edges[b - 1] };
        let upper = self.edges.get(b).copied().unwrap_or(f64::INFINITY);
        (lower, upper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub spec: GroupSpec,
    pub k: usize,
    pub counts: Vec<usize>,
    pub proportions: Vec<f64>,
    pub methods: Vec<String>,
    /// `hits[method][bin]`; `None` for bins without positives.
    pub hits: Vec<Vec<Option<f64>>>,
}

/// Per-bin Hits@K of each method. `values` holds the grouping heuristic
/// of each positive; ranks are taken against the method's full negatives.
pub fn group_breakdown(values: &[f64], spec: &GroupSpec, methods: &[MethodScores], k: usize) -> Result<GroupReport> {
    if values.is_empty() {
        return Err(Error::EmptyPositives);
    }
    let bins: Vec<usize> = values.iter().map(|&v| spec.bin(v)).collect();
    let mut counts = vec![0usize; spec.num_bins()];
    for &b in &bins {
        counts[b] += 1;
    }
    let total = values.len() as f64;
    let proportions = counts.iter().map(|&c| c as f64 / total).collect();
    let mut hits = Vec::with_capacity(methods.len());
    for m in methods {
        if m.pos.len() != values.len() {
            return Err(Error::DimMismatch {
                expected: values.len(),
                found: m.pos.len(),
            });
        }
        let report = m.report(&[])?;
        let mut correct = vec![0usize; spec.num_bins()];
        for (&b, &r) in bins.iter().zip(&report.ranks) {
            if r <= k as f64 {
                correct[b] += 1;
            }
        }
        hits.push(
            correct
                .iter()
                .zip(&counts)
                .map(|(&c, &n)| (n > 0).then(|| c as f64 / n as f64))
                .collect(),
        );
    }
    Ok(GroupReport {
        spec: spec.clone(),
        k,
        counts,
        proportions,
        methods: methods.iter().map(|m| m.name.clone()).collect(),
        hits,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinationGrid {
    pub names: Vec<String>,
    pub k: usize,
    /// Diagonal: single method; off-diagonal: elementwise sum of two methods.
    pub hits: Vec<Vec<f64>>,
}

/// Hits@K of every method and of every pairwise raw-score sum.
pub fn combination_grid(methods: &[MethodScores], k: usize) -> Result<CombinationGrid> {
    let n = methods.len();
    let mut hits = vec![vec![0.0; n]; n];
    for a in 0..n {
        hits[a][a] = methods[a].report(&[k])?.hits[&k];
        for b in a + 1..n {
            let (ma, mb) = (&methods[a], &methods[b]);
            if ma.pos.len() != mb.pos.len() {
                return Err(Error::DimMismatch {
                    expected: ma.pos.len(),
                    found: mb.pos.len(),
                });
            }
            let pos: Vec<f64> = ma.pos.iter().zip(&mb.pos).map(|(x, y)| x + y).collect();
            let neg = ma.neg.zip_with(&mb.neg, |x, y| x + y)?;
            let h = evaluate(&pos, &neg, &[k])?.hits[&k];
            hits[a][b] = h;
            hits[b][a] = h;
        }
    }
    Ok(CombinationGrid {
        names: methods.iter().map(|m| m.name.clone()).collect(),
        k,
        hits,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateWeightGroups {
    pub spec: GroupSpec,
    pub counts: Vec<usize>,
    /// Mean gate weight per expert in each bin; `None` for empty bins.
    pub means: Vec<Option<Vec<f64>>>,
}

/// Arithmetic mean of the gate's expert weights within each bin.
pub fn avg_gate_weights_per_group(
    gate: &GateNetwork,
    inputs: &[GateInput],
    values: &[f64],
    spec: &GroupSpec,
) -> Result<GateWeightGroups> {
    if inputs.len() != values.len() {
        return Err(Error::DimMismatch {
            expected: values.len(),
            found: inputs.len(),
        });
    }
    let mut sums = vec![vec![0.0; gate.m]; spec.num_bins()];
    let mut counts = vec![0usize; spec.num_bins()];
    for (input, &v) in inputs.iter().zip(values) {
        let b = spec.bin(v);
        let w = gate.weights(input)?;
        for (s, x) in sums[b].iter_mut().zip(w) {
            *s += x;
        }
        counts[b] += 1;
    }
    let means = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| (c > 0).then(|| s.into_iter().map(|x| x / c as f64).collect()))
        .collect();
    Ok(GateWeightGroups {
        spec: spec.clone(),
        counts,
        means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn method(name: &str, pos: Vec<f64>, neg: Vec<f64>) -> MethodScores {
        MethodScores {
            name: name.into(),
            pos,
            neg: NegScores::Shared(neg),
        }
    }

    #[test]
    fn binning() {
        let cn = GroupSpec::default_cn();
        let got: Vec<usize> = [0.0, 1.0, 2.0, 3.0, 9.0, 10.0, 29.0, 30.0, 500.0]
            .iter()
            .map(|&v| cn.bin(v))
            .collect();
        assert_eq!(got, vec![0, 1, 1, 2, 2, 3, 3, 4, 4]);
        let sp = GroupSpec::default_sp();
        let got: Vec<usize> = (1..=8).map(|d| sp.bin(d as f64)).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4, 4, 4, 4]);
        assert!(GroupSpec::new(GroupKey::Cn, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn quantile_edges_stay_ascending() {
        let spec = GroupSpec::quantile(GroupKey::Fcs, &[0.5; 10], &DEFAULT_QUANTILES).unwrap();
        assert!(spec.edges.windows(2).all(|w| w[0] < w[1]));
        let vals: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let spec = GroupSpec::quantile(GroupKey::Fcs, &vals, &DEFAULT_QUANTILES).unwrap();
        for (e, q) in spec.edges.iter().zip(DEFAULT_QUANTILES) {
            assert!((e - q).abs() < 1e-12);
        }
    }

    #[test]
    fn groups_partition_and_reduce() {
        let m = method("cn", vec![3.0, 0.0, 1.0, 2.0], vec![0.5, 1.5]);
        let spec = GroupSpec::default_cn();
        let all_zero = group_breakdown(&[0.0; 4], &spec, std::slice::from_ref(&m), 1).unwrap();
        assert_eq!(all_zero.proportions, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(all_zero.hits[0][1], None);
        let h1 = m.report(&[1]).unwrap().hits[&1];
        assert_eq!(all_zero.hits[0][0], Some(h1));

        let rep = group_breakdown(&[0.0, 1.0, 5.0, 40.0], &spec, &[m], 1).unwrap();
        assert!((rep.proportions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(rep.counts, vec![1, 1, 1, 0, 1]);
    }

    #[test]
    fn overlap_and_grid_properties() {
        let a = method("a", vec![5.0, 0.0, 3.0], vec![1.0, 2.0, 4.0]);
        let b = method("b", vec![5.0, 0.0, 3.0], vec![1.0, 2.0, 4.0]);
        let ov = overlap_matrix(&[a.clone(), b], 2).unwrap();
        assert_eq!(ov.matrix, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);

        let perfect = method("p", vec![10.0, 10.0], vec![0.0, 1.0]);
        let zero = method("z", vec![0.0, 0.0], vec![0.0, 0.0]);
        let grid = combination_grid(&[perfect.clone(), zero, perfect], 1).unwrap();
        assert_eq!(grid.hits[0][1], 1.0);
        assert_eq!(grid.hits[1][0], grid.hits[0][1]);
        assert_eq!(grid.hits[0][2], grid.hits[0][0]);
    }
}
