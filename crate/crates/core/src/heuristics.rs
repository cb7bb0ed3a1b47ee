//! Pairwise link heuristics computed on the training graph.
//!
//! Every heuristic here is symmetric in its two endpoints bit-for-bit, so a
//! pair and its reversal always produce identical gate inputs and scores.

use std::collections::{HashMap, HashSet, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Graph, NodeId, Pair};

/// Column names of [`StructuralVector`], in order.
pub const STRUCTURAL_NAMES: [&str; 8] = [
    "deg_sum",
    "deg_absdiff",
    "cn",
    "aa",
    "ra",
    "sp_score",
    "katz",
    "ppr_sym",
];
pub const NUM_STRUCTURAL: usize = STRUCTURAL_NAMES.len();

pub const KATZ_MAX_LEN_LIMIT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicConfig {
    pub katz_beta: f64,
    pub katz_max_len: usize,
    pub ppr_alpha: f64,
    pub ppr_eps: f64,
    pub sp_cap: usize,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            katz_beta: 0.05,
            katz_max_len: 3,
            ppr_alpha: 0.15,
            ppr_eps: 1e-4,
            sp_cap: 7,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.katz_beta) {
            return Err(Error::InvalidConfig(format!(
                "katz_beta must lie in (0, 1), got {}",
                self.katz_beta
            )));
        }
        if !open_unit(self.ppr_alpha) {
            return Err(Error::InvalidConfig(format!(
                "ppr_alpha must lie in (0, 1), got {}",
                self.ppr_alpha
            )));
        }
        if !(self.ppr_eps > 0.0 && self.ppr_eps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "ppr_eps must be positive, got {}",
                self.ppr_eps
            )));
        }
        if self.katz_max_len == 0 || self.katz_max_len > KATZ_MAX_LEN_LIMIT {
            return Err(Error::InvalidConfig(format!(
                "katz_max_len must lie in 1..={KATZ_MAX_LEN_LIMIT}, got {}",
                self.katz_max_len
            )));
        }
        if self.sp_cap == 0 {
            return Err(Error::InvalidConfig("sp_cap must be at least 1".into()));
        }
        Ok(())
    }

    /// `key = value` lines, readable back with [`HeuristicConfig::from_kv`].
    pub fn to_kv(&self) -> String {
        format!(
            "katz_beta = {}\nkatz_max_len = {}\nppr_alpha = {}\nppr_eps = {}\nsp_cap = {}\n",
            self.katz_beta, self.katz_max_len, self.ppr_alpha, self.ppr_eps, self.sp_cap
        )
    }

    pub fn from_kv(text: &str) -> Result<HeuristicConfig> {
        let mut cfg = HeuristicConfig::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("bad line {line:?}")))?;
            let v = v.trim();
            let bad = || Error::InvalidConfig(format!("bad value {v:?} for {}", k.trim()));
            match k.trim() {
                "katz_beta" => cfg.katz_beta = v.parse().map_err(|_| bad())?,
                "katz_max_len" => cfg.katz_max_len = v.parse().map_err(|_| bad())?,
                "ppr_alpha" => cfg.ppr_alpha = v.parse().map_err(|_| bad())?,
                "ppr_eps" => cfg.ppr_eps = v.parse().map_err(|_| bad())?,
                "sp_cap" => cfg.sp_cap = v.parse().map_err(|_| bad())?,
                other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn check_pair(g: &Graph, i: NodeId, j: NodeId) -> Result<()> {
    g.check_node(i)?;
    g.check_node(j)?;
    if i == j {
        return Err(Error::SelfPair(i));
    }
    Ok(())
}

/// Calls `f(k)` for every common neighbor `k`, in ascending order.
fn for_each_common(g: &Graph, i: NodeId, j: NodeId, mut f: impl FnMut(NodeId)) {
    let (a, b) = (g.neighbors(i), g.neighbors(j));
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                f(a[x]);
                x += 1;
                y += 1;
            }
        }
    }
}

fn cn_unchecked(g: &Graph, i: NodeId, j: NodeId) -> usize {
    let mut c = 0;
    for_each_common(g, i, j, |_| c += 1);
    c
}

fn aa_unchecked(g: &Graph, i: NodeId, j: NodeId) -> f64 {
    let mut s = 0.0;
    for_each_common(g, i, j, |k| {
        let d = g.deg(k);
        if d >= 2 {
            s += 1.0 / (d as f64).ln();
        }
    });
    s
}

fn ra_unchecked(g: &Graph, i: NodeId, j: NodeId) -> f64 {
    let mut s = 0.0;
    for_each_common(g, i, j, |k| {
        let d = g.deg(k);
        if d > 0 {
            s += 1.0 / d as f64;
        }
    });
    s
}

pub fn common_neighbors(g: &Graph, i: NodeId, j: NodeId) -> Result<usize> {
    check_pair(g, i, j)?;
    Ok(cn_unchecked(g, i, j))
}

/// Sum of `1 / ln(d_k)` over common neighbors `k` with `d_k >= 2`.
pub fn adamic_adar(g: &Graph, i: NodeId, j: NodeId) -> Result<f64> {
    check_pair(g, i, j)?;
    Ok(aa_unchecked(g, i, j))
}

/// Sum of `1 / d_k` over common neighbors `k`.
pub fn resource_allocation(g: &Graph, i: NodeId, j: NodeId) -> Result<f64> {
    check_pair(g, i, j)?;
    Ok(ra_unchecked(g, i, j))
}

/// Hop distance between two nodes, or `Unreachable` beyond the depth cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    Hops(usize),
    Unreachable,
}

impl Distance {
    /// Higher-is-better ranking score: `1/d`, or 0 when unreachable.
    pub fn score(self) -> f64 {
        match self {
            Distance::Hops(0) => f64::INFINITY,
            Distance::Hops(d) => 1.0 / d as f64,
            Distance::Unreachable => 0.0,
        }
    }

    /// Raw distance used for grouping; unreachable maps to `cap + 1`.
    pub fn capped(self, cap: usize) -> usize {
        match self {
            Distance::Hops(d) => d.min(cap + 1),
            Distance::Unreachable => cap + 1,
        }
    }
}

struct BfsSide {
    dist: HashMap<NodeId, usize>,
    frontier: Vec<NodeId>,
    depth: usize,
}

impl BfsSide {
    fn new(root: NodeId) -> Self {
        BfsSide {
            dist: HashMap::from([(root, 0)]),
            frontier: vec![root],
            depth: 0,
        }
    }

    fn volume(&self, g: &Graph) -> usize {
        self.frontier.iter().map(|&v| g.deg(v)).sum()
    }

    /// Expands one full BFS level; returns the shortest meeting length found.
    fn expand(&mut self, g: &Graph, other: &BfsSide) -> Option<usize> {
        let mut next = Vec::new();
        let mut best: Option<usize> = None;
        let depth = self.depth + 1;
        for &u in &self.frontier {
            for &w in g.neighbors(u) {
                if self.dist.contains_key(&w) {
                    continue;
                }
                self.dist.insert(w, depth);
                if let Some(&od) = other.dist.get(&w) {
                    best = Some(best.map_or(depth + od, |b| b.min(depth + od)));
                }
                next.push(w);
            }
        }
        self.frontier = next;
        self.depth = depth;
        best
    }
}

fn sp_unchecked(g: &Graph, i: NodeId, j: NodeId, cap: usize) -> Distance {
    let mut a = BfsSide::new(i);
    let mut b = BfsSide::new(j);
    while a.depth + b.depth < cap && !a.frontier.is_empty() && !b.frontier.is_empty() {
        let found = if a.volume(g) <= b.volume(g) {
            a.expand(g, &b)
        } else {
            b.expand(g, &a)
        };
        if let Some(d) = found {
            return Distance::Hops(d);
        }
    }
    Distance::Unreachable
}

/// Bidirectional BFS distance, `Unreachable` when longer than `cap`.
pub fn shortest_path(g: &Graph, i: NodeId, j: NodeId, cap: usize) -> Result<Distance> {
    check_pair(g, i, j)?;
    if cap == 0 {
        return Err(Error::InvalidConfig("sp_cap must be at least 1".into()));
    }
    Ok(sp_unchecked(g, i, j, cap))
}

/// Walk counts `(A^l)_{ij}` for `l = 1..=max_len`.
///
/// Walks are expanded from the lower-degree endpoint up to length
/// `max_len - 1` and closed through the other endpoint's neighbor list.
/// Counts are integers, so the result does not depend on pair orientation.
fn walk_counts(g: &Graph, i: NodeId, j: NodeId, max_len: usize) -> Vec<u64> {
    let (src, dst) = if (g.deg(i), i) <= (g.deg(j), j) { (i, j) } else { (j, i) };
    let close = |walks: &HashMap<NodeId, u64>| -> u64 {
        g.neighbors(dst)
            .iter()
            .filter_map(|k| walks.get(k))
            .fold(0u64, |acc, &c| acc.saturating_add(c))
    };
    let mut counts = Vec::with_capacity(max_len);
    let mut walks: HashMap<NodeId, u64> = HashMap::from([(src, 1)]);
    for l in 1..=max_len {
        counts.push(close(&walks));
        if l == max_len {
            break;
        }
        let mut next: HashMap<NodeId, u64> = HashMap::with_capacity(walks.len() * 4);
        for (&u, &c) in &walks {
            for &w in g.neighbors(u) {
                let e = next.entry(w).or_insert(0);
                *e = e.saturating_add(c);
            }
        }
        walks = next;
    }
    counts
}

fn katz_unchecked(g: &Graph, i: NodeId, j: NodeId, beta: f64, max_len: usize) -> f64 {
    walk_counts(g, i, j, max_len)
        .into_iter()
        .enumerate()
        .map(|(l, c)| beta.powi(l as i32 + 1) * c as f64)
        .sum()
}

/// Truncated Katz index `sum_{l=1..L} beta^l (A^l)_{ij}`.
pub fn katz(g: &Graph, i: NodeId, j: NodeId, beta: f64, max_len: usize) -> Result<f64> {
    check_pair(g, i, j)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "katz beta must lie in (0, 1), got {beta}"
        )));
    }
    if max_len == 0 || max_len > KATZ_MAX_LEN_LIMIT {
        return Err(Error::InvalidConfig(format!(
            "katz max_len must lie in 1..={KATZ_MAX_LEN_LIMIT}, got {max_len}"
        )));
    }
    Ok(katz_unchecked(g, i, j, beta, max_len))
}

/// Sparse non-negative node scores, sorted by node id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseScores {
    entries: Vec<(NodeId, f64)>,
}

impl SparseScores {
    pub fn get(&self, v: NodeId) -> f64 {
        self.entries
            .binary_search_by_key(&v, |e| e.0)
            .map_or(0.0, |idx| self.entries[idx].1)
    }

    pub fn entries(&self) -> &[(NodeId, f64)] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }
}

fn ppr_unchecked(g: &Graph, src: NodeId, alpha: f64, eps: f64) -> SparseScores {
    let mut estimate: HashMap<NodeId, f64> = HashMap::new();
    let mut residual: HashMap<NodeId, f64> = HashMap::from([(src, 1.0)]);
    let mut queue = VecDeque::from([src]);
    let mut queued: HashSet<NodeId> = HashSet::from([src]);

    while let Some(u) = queue.pop_front() {
        queued.remove(&u);
        let r = residual.insert(u, 0.0).unwrap_or(0.0);
        if r <= 0.0 {
            continue;
        }
        let d = g.deg(u);
        if d == 0 {
            // a walk stuck at a dangling node only ever restarts onto it
            *estimate.entry(u).or_insert(0.0) += r;
            continue;
        }
        *estimate.entry(u).or_insert(0.0) += alpha * r;
        let share = (1.0 - alpha) * r / d as f64;
        for &w in g.neighbors(u) {
            let rw = residual.entry(w).or_insert(0.0);
            *rw += share;
            if *rw >= eps * g.deg(w) as f64 && queued.insert(w) {
                queue.push_back(w);
            }
        }
    }

    let mut entries: Vec<(NodeId, f64)> = estimate.into_iter().filter(|e| e.1 > 0.0).collect();
    entries.sort_unstable_by_key(|e| e.0);
    SparseScores { entries }
}

/// Approximate personalized PageRank from `src` by forward push.
///
/// On return every node's leftover residual is below `eps * degree`.
pub fn ppr(g: &Graph, src: NodeId, alpha: f64, eps: f64) -> Result<SparseScores> {
    g.check_node(src)?;
    check_ppr_params(alpha, eps)?;
    Ok(ppr_unchecked(g, src, alpha, eps))
}

fn check_ppr_params(alpha: f64, eps: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "ppr alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidConfig(format!("ppr eps must be positive, got {eps}")));
    }
    Ok(())
}

fn ppr_pair_unchecked(g: &Graph, i: NodeId, j: NodeId, alpha: f64, eps: f64) -> f64 {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    ppr_unchecked(g, lo, alpha, eps).get(hi) + ppr_unchecked(g, hi, alpha, eps).get(lo)
}

/// Symmetrized PPR, `ppr(i)[j] + ppr(j)[i]`.
pub fn ppr_pair(g: &Graph, i: NodeId, j: NodeId, alpha: f64, eps: f64) -> Result<f64> {
    check_pair(g, i, j)?;
    check_ppr_params(alpha, eps)?;
    Ok(ppr_pair_unchecked(g, i, j, alpha, eps))
}

/// Cosine similarity of two feature rows; 0 when either row is all zeros.
pub fn feature_cosine(f: &FeatureMatrix, i: NodeId, j: NodeId) -> Result<f64> {
    f.check_node(i)?;
    f.check_node(j)?;
    let (a, b) = (f.row(i), f.row(j));
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

/// Elementwise product of the two feature rows.
pub fn pair_feature(f: &FeatureMatrix, i: NodeId, j: NodeId) -> Result<Vec<f64>> {
    f.check_node(i)?;
    f.check_node(j)?;
    Ok(f.row(i).iter().zip(f.row(j)).map(|(x, y)| x * y).collect())
}

/// `[deg_sum, deg_absdiff, CN, AA, RA, 1/SP, Katz, PPR_sym]` for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralVector(pub [f64; NUM_STRUCTURAL]);

impl StructuralVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

fn structural_unchecked(g: &Graph, cfg: &HeuristicConfig, i: NodeId, j: NodeId) -> StructuralVector {
    let (di, dj) = (g.deg(i) as f64, g.deg(j) as f64);
    StructuralVector([
        di + dj,
        (di - dj).abs(),
        cn_unchecked(g, i, j) as f64,
        aa_unchecked(g, i, j),
        ra_unchecked(g, i, j),
        sp_unchecked(g, i, j, cfg.sp_cap).score(),
        katz_unchecked(g, i, j, cfg.katz_beta, cfg.katz_max_len),
        ppr_pair_unchecked(g, i, j, cfg.ppr_alpha, cfg.ppr_eps),
    ])
}

pub fn structural_vector(g: &Graph, cfg: &HeuristicConfig, i: NodeId, j: NodeId) -> Result<StructuralVector> {
    cfg.validate()?;
    check_pair(g, i, j)?;
    Ok(structural_unchecked(g, cfg, i, j))
}

/// Structural vectors for many pairs, in input order.
pub fn batch_structural(g: &Graph, cfg: &HeuristicConfig, pairs: &[Pair]) -> Result<Vec<StructuralVector>> {
    cfg.validate()?;
    for &(i, j) in pairs {
        check_pair(g, i, j)?;
    }
    Ok(pairs
        .par_iter()
        .map(|&(i, j)| structural_unchecked(g, cfg, i, j))
        .collect())
}

/// A single heuristic used as a ranking score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heuristic {
    CommonNeighbors,
    AdamicAdar,
    ResourceAllocation,
    ShortestPath,
    Katz,
    Ppr,
    FeatureCosine,
}

impl Heuristic {
    pub const ALL: [Heuristic; 7] = [
        Heuristic::CommonNeighbors,
        Heuristic::AdamicAdar,
        Heuristic::ResourceAllocation,
        Heuristic::ShortestPath,
        Heuristic::Katz,
        Heuristic::Ppr,
        Heuristic::FeatureCosine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::CommonNeighbors => "cn",
            Heuristic::AdamicAdar => "aa",
            Heuristic::ResourceAllocation => "ra",
            Heuristic::ShortestPath => "sp",
            Heuristic::Katz => "katz",
            Heuristic::Ppr => "ppr",
            Heuristic::FeatureCosine => "fcs",
        }
    }

    pub fn from_name(name: &str) -> Result<Heuristic> {
        let lower = name.trim().to_ascii_lowercase();
        Heuristic::ALL
            .into_iter()
            .find(|h| h.name() == lower)
            .ok_or_else(|| Error::UnknownHeuristic(name.to_string()))
    }

    pub fn needs_features(self) -> bool {
        self == Heuristic::FeatureCosine
    }

    fn score_unchecked(
        self,
        g: &Graph,
        features: Option<&FeatureMatrix>,
        cfg: &HeuristicConfig,
        i: NodeId,
        j: NodeId,
    ) -> Result<f64> {
        Ok(match self {
            Heuristic::CommonNeighbors => cn_unchecked(g, i, j) as f64,
            Heuristic::AdamicAdar => aa_unchecked(g, i, j),
            Heuristic::ResourceAllocation => ra_unchecked(g, i, j),
            Heuristic::ShortestPath => sp_unchecked(g, i, j, cfg.sp_cap).score(),
            Heuristic::Katz => katz_unchecked(g, i, j, cfg.katz_beta, cfg.katz_max_len),
            Heuristic::Ppr => ppr_pair_unchecked(g, i, j, cfg.ppr_alpha, cfg.ppr_eps),
            Heuristic::FeatureCosine => feature_cosine(features.ok_or(Error::NoFeatures)?, i, j)?,
        })
    }

    pub fn score(
        self,
        g: &Graph,
        features: Option<&FeatureMatrix>,
        cfg: &HeuristicConfig,
        i: NodeId,
        j: NodeId,
    ) -> Result<f64> {
        cfg.validate()?;
        check_pair(g, i, j)?;
        self.score_unchecked(g, features, cfg, i, j)
    }

    /// Scores for many pairs, in input order.
    pub fn score_batch(
        self,
        g: &Graph,
        features: Option<&FeatureMatrix>,
        cfg: &HeuristicConfig,
        pairs: &[Pair],
    ) -> Result<Vec<f64>> {
        cfg.validate()?;
        if self.needs_features() && features.is_none() {
            return Err(Error::NoFeatures);
        }
        for &(i, j) in pairs {
            check_pair(g, i, j)?;
        }
        pairs
            .par_iter()
            .map(|&(i, j)| self.score_unchecked(g, features, cfg, i, j))
            .collect()
    }
}
