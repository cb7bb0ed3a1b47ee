//! Experts: anything that assigns a raw real-valued score to a node pair.
//!
//! Built-in heuristics, a trainable feature MLP, and score tables exported by
//! outside models all sit behind the same registry and produce one row of a
//! [`ScoreMatrix`] each.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{canonical, FeatureMatrix, Graph, NodeId, Pair};
use crate::heuristics::{pair_feature, Heuristic, HeuristicConfig};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::{bce_with_logits, AdamConfig, AdamState, Mlp, MlpShape, Rng};

/// Scores keyed by canonical `(min, max)` pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    entries: HashMap<Pair, f64>,
}

impl ScoreTable {
    pub fn get(&self, pair: Pair) -> Option<f64> {
        self.entries.get(&canonical(pair)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, pair: Pair, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::NonFiniteScore { line: 0 });
        }
        self.entries.insert(canonical(pair), score);
        Ok(())
    }

    pub fn from_pairs(pairs: &[Pair], scores: &[f64]) -> Result<ScoreTable> {
        if pairs.len() != scores.len() {
            return Err(Error::DimMismatch {
                expected: pairs.len(),
                found: scores.len(),
            });
        }
        let mut t = ScoreTable::default();
        for (&p, &s) in pairs.iter().zip(scores) {
            t.insert(p, s)?;
        }
        Ok(t)
    }
}

pub fn parse_score_table<R: BufRead>(reader: R) -> Result<ScoreTable> {
    let mut entries: HashMap<Pair, f64> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            line: line_no,
            reason: e.to_string(),
        })?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::MalformedLine {
                line: line_no,
                reason: format!("expected `u v score`, found {} fields", toks.len()),
            });
        }
        let node = |t: &str| -> Result<NodeId> {
            t.parse().map_err(|_| Error::MalformedLine {
                line: line_no,
                reason: format!("{t:?} is not a node id"),
            })
        };
        let (u, v) = (node(toks[0])?, node(toks[1])?);
        if u == v {
            return Err(Error::SelfLoop { line: line_no });
        }
        let score: f64 = toks[2].parse().map_err(|_| Error::MalformedLine {
            line: line_no,
            reason: format!("{:?} is not a real score", toks[2]),
        })?;
        if !score.is_finite() {
            return Err(Error::NonFiniteScore { line: line_no });
        }
        let key = canonical((u, v));
        match entries.get(&key) {
            Some(&prev) if prev != score => {
                return Err(Error::ConflictingDuplicate {
                    line: line_no,
                    pair: (u, v),
                })
            }
            Some(_) => {}
            None => {
                entries.insert(key, score);
            }
        }
    }
    Ok(ScoreTable { entries })
}

pub fn load_score_table(path: impl AsRef<Path>) -> Result<ScoreTable> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_score_table(BufReader::new(f)).map_err(|e| e.at(path))
}

/// Writes `u v score` lines. Scores use Rust's shortest round-trip format.
pub fn write_scores<W: Write>(mut w: W, pairs: &[Pair], scores: &[f64]) -> std::io::Result<()> {
    for (&(u, v), s) in pairs.iter().zip(scores) {
        writeln!(w, "{u} {v} {s}")?;
    }
    Ok(())
}

/// Scores of `m` experts over an ordered pair list.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    expert_names: Vec<String>,
    pairs: Vec<Pair>,
    /// Pair-major: `data[p * m + o]`.
    data: Vec<f64>,
}

impl ScoreMatrix {
    /// Builds from one score row per expert.
    pub fn from_rows(names: Vec<String>, pairs: Vec<Pair>, rows: &[Vec<f64>]) -> Result<ScoreMatrix> {
        if names.is_empty() {
            return Err(Error::EmptyRegistry);
        }
        if rows.len() != names.len() {
            return Err(Error::DimMismatch {
                expected: names.len(),
                found: rows.len(),
            });
        }
        let m = names.len();
        let mut data = vec![0.0; m * pairs.len()];
        for (o, row) in rows.iter().enumerate() {
            if row.len() != pairs.len() {
                return Err(Error::DimMismatch {
                    expected: pairs.len(),
                    found: row.len(),
                });
            }
            for (p, &s) in row.iter().enumerate() {
                if !s.is_finite() {
                    return Err(Error::NonFiniteScore { line: p + 1 });
                }
                data[p * m + o] = s;
            }
        }
        Ok(ScoreMatrix {
            expert_names: names,
            pairs,
            data,
        })
    }

    pub fn expert_names(&self) -> &[String] {
        &self.expert_names
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn num_experts(&self) -> usize {
        self.expert_names.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// The `m` expert scores of pair index `p`.
    pub fn column(&self, p: usize) -> &[f64] {
        let m = self.num_experts();
        &self.data[p * m..(p + 1) * m]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.num_experts())
    }

    /// All scores of expert `o`, in pair order.
    pub fn row(&self, o: usize) -> Vec<f64> {
        self.columns().map(|c| c[o]).collect()
    }

    pub fn expert_index(&self, name: &str) -> Option<usize> {
        self.expert_names.iter().position(|n| n == name)
    }

    /// Keeps the pair columns at `indices`, in that order.
    pub fn select_pairs(&self, indices: &[usize]) -> ScoreMatrix {
        let m = self.num_experts();
        let mut data = Vec::with_capacity(indices.len() * m);
        let mut pairs = Vec::with_capacity(indices.len());
        for &p in indices {
            data.extend_from_slice(self.column(p));
            pairs.push(self.pairs[p]);
        }
        ScoreMatrix {
            expert_names: self.expert_names.clone(),
            pairs,
            data,
        }
    }

    /// Keeps the named experts, in the given order.
    pub fn select_experts(&self, names: &[String]) -> Result<ScoreMatrix> {
        let idx = names
            .iter()
            .map(|n| {
                self.expert_index(n)
                    .ok_or_else(|| Error::InvalidConfig(format!("no expert named {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<Vec<f64>> = idx.iter().map(|&o| self.row(o)).collect();
        ScoreMatrix::from_rows(names.to_vec(), self.pairs.clone(), &rows)
    }
}

/// Per-expert z-scoring of raw scores, fit on one matrix and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreNormalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScoreNormalizer {
    pub fn fit(scores: &ScoreMatrix) -> ScoreNormalizer {
        let m = scores.num_experts();
        let n = scores.num_pairs().max(1) as f64;
        let mut mean = vec![0.0; m];
        for c in scores.columns() {
            for (a, s) in mean.iter_mut().zip(c) {
                *a += s;
            }
        }
        mean.iter_mut().for_each(|a| *a /= n);
        let mut var = vec![0.0; m];
        for c in scores.columns() {
            for o in 0..m {
                var[o] += (c[o] - mean[o]).powi(2);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt().max(1e-8)).collect();
        ScoreNormalizer { mean, std }
    }

    pub fn identity(m: usize) -> ScoreNormalizer {
        ScoreNormalizer {
            mean: vec![0.0; m],
            std: vec![1.0; m],
        }
    }

    pub fn apply(&self, scores: &ScoreMatrix) -> Result<ScoreMatrix> {
        if scores.num_experts() != self.mean.len() {
            return Err(Error::DimMismatch {
                expected: self.mean.len(),
                found: scores.num_experts(),
            });
        }
        let m = self.mean.len();
        let mut out = scores.clone();
        for (k, s) in out.data.iter_mut().enumerate() {
            let o = k % m;
            *s = (*s - self.mean[o]) / self.std[o];
        }
        Ok(out)
    }
}

/// MLP over `x_i ⊙ x_j` returning a logit.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMlpExpert {
    pub mlp: Mlp,
}

pub const FEATURE_MLP_CHECKPOINT_KIND: u8 = 2;

impl FeatureMlpExpert {
    pub fn score(&self, features: &FeatureMatrix, i: NodeId, j: NodeId) -> Result<f64> {
        Ok(self.mlp.predict(&pair_feature(features, i, j)?)?[0])
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: FEATURE_MLP_CHECKPOINT_KIND,
            meta: vec![],
            names: vec![],
            shapes: vec![self.mlp.shape.dims().to_vec()],
            params: self.mlp.params.clone(),
            aux: vec![self.mlp.dropout],
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<FeatureMlpExpert> {
        if ck.kind != FEATURE_MLP_CHECKPOINT_KIND || ck.shapes.len() != 1 {
            return Err(Error::Checkpoint("not a feature-MLP expert checkpoint".into()));
        }
        let shape = MlpShape::new(ck.shapes[0].clone())?;
        if shape.output_dim() != 1 {
            return Err(Error::Checkpoint("feature-MLP expert must have width-1 output".into()));
        }
        let dropout = ck.aux.first().copied().unwrap_or(0.0);
        Ok(FeatureMlpExpert {
            mlp: Mlp::new(shape, ck.params.clone(), dropout)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_checkpoint().write(f).map_err(|e| e.at(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FeatureMlpExpert> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::read(BufReader::new(f))
            .and_then(|ck| FeatureMlpExpert::from_checkpoint(&ck))
            .map_err(|e| e.at(path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpTrainConfig {
    pub hidden: usize,
    pub layers: usize,
    pub lr: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpTrainConfig {
    fn default() -> Self {
        MlpTrainConfig {
            hidden: 64,
            layers: 2,
            lr: 1e-2,
            dropout: 0.0,
            weight_decay: 0.0,
            epochs: 50,
            batch_size: 256,
        }
    }
}

fn sample_non_edge(g: &Graph, rng: &mut Rng) -> Option<Pair> {
    let n = g.node_count();
    if n < 2 {
        return None;
    }
    for _ in 0..1000 {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v && !g.has_edge(u, v) {
            return Some((u, v));
        }
    }
    None
}

/// Trains the feature-MLP expert with BCE against uniformly resampled
/// non-edges, one negative per positive per epoch.
pub fn train_feature_mlp_expert(
    features: &FeatureMatrix,
    graph: &Graph,
    train_pos: &[Pair],
    rng: &mut Rng,
    cfg: &MlpTrainConfig,
) -> Result<FeatureMlpExpert> {
    if features.dim() == 0 {
        return Err(Error::NoFeatures);
    }
    if features.node_count() != graph.node_count() {
        return Err(Error::DimMismatch {
            expected: graph.node_count(),
            found: features.node_count(),
        });
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be positive".into()));
    }
    let shape = MlpShape::uniform(features.dim(), cfg.hidden, 1, cfg.layers)?;
    let mut mlp = Mlp::init(shape, cfg.dropout, rng)?;
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            ..Default::default()
        },
        mlp.params.len(),
    );
    let mut grads = vec![0.0; mlp.params.len()];
    for _ in 0..cfg.epochs {
        let mut batch: Vec<(Pair, f64)> = train_pos.iter().map(|&p| (p, 1.0)).collect();
        for _ in 0..train_pos.len() {
            match sample_non_edge(graph, rng) {
                Some(p) => batch.push((p, 0.0)),
                None => return Err(Error::NoNegatives),
            }
        }
        batch.shuffle(rng);
        for chunk in batch.chunks(cfg.batch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &((i, j), y) in chunk {
                let x = pair_feature(features, i, j)?;
                let (out, tape) = mlp.shape.forward(&mlp.params, &x, mlp.dropout, Some(rng))?;
                let (_, dz) = bce_with_logits(out[0], y);
                mlp.shape.backward(&mlp.params, &tape, &[dz * scale], &mut grads)?;
            }
            adam.step(&mut mlp.params, &grads)?;
        }
    }
    Ok(FeatureMlpExpert { mlp })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExpertKind {
    Heuristic(Heuristic),
    FeatureMlp(FeatureMlpExpert),
    External(ScoreTable),
}

impl ExpertKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExpertKind::Heuristic(_) => "heuristic",
            ExpertKind::FeatureMlp(_) => "feature-mlp",
            ExpertKind::External(_) => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expert {
    pub name: String,
    pub kind: ExpertKind,
}

impl Expert {
    pub fn heuristic(h: Heuristic) -> Expert {
        Expert {
            name: h.name().to_string(),
            kind: ExpertKind::Heuristic(h),
        }
    }

    pub fn external(name: impl Into<String>, table: ScoreTable) -> Expert {
        Expert {
            name: name.into(),
            kind: ExpertKind::External(table),
        }
    }

    pub fn feature_mlp(name: impl Into<String>, model: FeatureMlpExpert) -> Expert {
        Expert {
            name: name.into(),
            kind: ExpertKind::FeatureMlp(model),
        }
    }
}

/// One expert declaration as written in a config or on the command line.
///
/// Accepted forms: a heuristic name (`cn`, `aa`, `ra`, `sp`, `katz`, `ppr`,
/// `fcs`), `external:<path>` or `external:<name>=<path>` for score files,
/// and `mlp:<path>` or `mlp:<name>=<path>` for a feature-MLP checkpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpertDecl {
    Heuristic(Heuristic),
    External { name: String, path: PathBuf },
    FeatureMlp { name: String, path: PathBuf },
}

fn split_named(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) => (name.trim().to_string(), PathBuf::from(path.trim())),
        None => {
            let path = PathBuf::from(spec.trim());
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (name, path)
        }
    }
}

impl FromStr for ExpertDecl {
    type Err = Error;

    fn from_str(s: &str) -> Result<ExpertDecl> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("external:") {
            let (name, path) = split_named(rest.trim_matches('"'));
            return Ok(ExpertDecl::External { name, path });
        }
        if let Some(rest) = s.strip_prefix("mlp:") {
            let (name, path) = split_named(rest.trim_matches('"'));
            return Ok(ExpertDecl::FeatureMlp { name, path });
        }
        Heuristic::from_name(s).map(ExpertDecl::Heuristic)
    }
}

impl ExpertDecl {
    pub fn name(&self) -> String {
        match self {
            ExpertDecl::Heuristic(h) => h.name().to_string(),
            ExpertDecl::External { name, .. } | ExpertDecl::FeatureMlp { name, .. } => name.clone(),
        }
    }

    pub fn parse_list(text: &str) -> Result<Vec<ExpertDecl>> {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertRegistry {
    experts: Vec<Expert>,
}

impl ExpertRegistry {
    pub fn new(experts: Vec<Expert>) -> Result<ExpertRegistry> {
        let mut seen = HashSet::new();
        let mut mlps = 0;
        for e in &experts {
            if !seen.insert(e.name.to_ascii_lowercase()) {
                return Err(Error::DuplicateName(e.name.clone()));
            }
            if matches!(e.kind, ExpertKind::FeatureMlp(_)) {
                mlps += 1;
            }
        }
        if mlps > 1 {
            return Err(Error::InvalidConfig(
                "at most one feature-MLP expert may be registered".into(),
            ));
        }
        Ok(ExpertRegistry { experts })
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.experts.iter().map(|e| e.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Expert> {
        self.experts.iter().find(|e| e.name == name)
    }

    /// Registry restricted to `names`, in that order.
    pub fn subset(&self, names: &[String]) -> Result<ExpertRegistry> {
        let experts = names
            .iter()
            .map(|n| {
                self.get(n)
                    .cloned()
                    .ok_or_else(|| Error::InvalidConfig(format!("no expert named {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ExpertRegistry::new(experts)
    }

    /// Registry with the named expert removed.
    pub fn without(&self, name: &str) -> Result<ExpertRegistry> {
        if self.get(name).is_none() {
            return Err(Error::InvalidConfig(format!("no expert named {name:?}")));
        }
        ExpertRegistry::new(self.experts.iter().filter(|e| e.name != name).cloned().collect())
    }
}

/// Builds a registry from declarations, loading score files and checkpoints.
pub fn register_experts(decls: &[ExpertDecl]) -> Result<ExpertRegistry> {
    let mut seen = HashSet::new();
    for d in decls {
        if !seen.insert(d.name().to_ascii_lowercase()) {
            return Err(Error::DuplicateName(d.name()));
        }
    }
    let experts = decls
        .iter()
        .map(|d| -> Result<Expert> {
            Ok(match d {
                ExpertDecl::Heuristic(h) => Expert::heuristic(*h),
                ExpertDecl::External { name, path } => Expert::external(name.clone(), load_score_table(path)?),
                ExpertDecl::FeatureMlp { name, path } => {
                    Expert::feature_mlp(name.clone(), FeatureMlpExpert::load(path)?)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ExpertRegistry::new(experts)
}

/// Scores every pair with every expert in the registry.
pub fn score_pairs(
    registry: &ExpertRegistry,
    g: &Graph,
    features: Option<&FeatureMatrix>,
    cfg: &HeuristicConfig,
    pairs: &[Pair],
) -> Result<ScoreMatrix> {
    if registry.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    let rows = registry
        .experts()
        .iter()
        .map(|e| -> Result<Vec<f64>> {
            match &e.kind {
                ExpertKind::Heuristic(h) => h.score_batch(g, features, cfg, pairs),
                ExpertKind::FeatureMlp(model) => {
                    let f = features.ok_or(Error::NoFeatures)?;
                    pairs.par_iter().map(|&(i, j)| model.score(f, i, j)).collect()
                }
                ExpertKind::External(table) => pairs
                    .iter()
                    .map(|&p| {
                        table.get(p).ok_or_else(|| Error::MissingScore {
                            expert: e.name.clone(),
                            pair: p,
                        })
                    })
                    .collect(),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::from_rows(registry.names(), pairs.to_vec(), &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::seeded_rng;

    fn g1() -> Graph {
        Graph::from_pairs(&[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], 4).unwrap()
    }

    #[test]
    fn parses_declarations() {
        let decls = ExpertDecl::parse_list("CN, aa, external:\"ncn.scores\"").unwrap();
        assert_eq!(decls.len(), 3);
        assert_eq!(decls[2].name(), "ncn");
        assert_eq!(
            "external:neo=/tmp/x.txt".parse::<ExpertDecl>().unwrap(),
            ExpertDecl::External {
                name: "neo".into(),
                path: "/tmp/x.txt".into()
            }
        );
        assert!(matches!("foo".parse::<ExpertDecl>(), Err(Error::UnknownHeuristic(_))));
    }

    #[test]
    fn registers_and_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ncn.scores");
        std::fs::write(&p, "0 3 1.5\n1 2 0.5\n").unwrap();
        let decls = vec![
            ExpertDecl::Heuristic(Heuristic::CommonNeighbors),
            ExpertDecl::Heuristic(Heuristic::AdamicAdar),
            ExpertDecl::External {
                name: "ncn".into(),
                path: p,
            },
        ];
        let reg = register_experts(&decls).unwrap();
        assert_eq!(reg.len(), 3);
        assert_eq!(reg.names(), vec!["cn", "aa", "ncn"]);

        let dup = vec![
            ExpertDecl::Heuristic(Heuristic::CommonNeighbors),
            ExpertDecl::Heuristic(Heuristic::CommonNeighbors),
        ];
        assert!(matches!(register_experts(&dup), Err(Error::DuplicateName(n)) if n == "cn"));
    }

    #[test]
    fn score_table_rules() {
        let t = parse_score_table("0 1 0.7\n1 0 0.7".as_bytes()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get((1, 0)), Some(0.7));
        assert!(matches!(
            parse_score_table("0 1 0.7\n1 0 0.9".as_bytes()),
            Err(Error::ConflictingDuplicate { line: 2, .. })
        ));
        assert!(matches!(
            parse_score_table("0 1 inf".as_bytes()),
            Err(Error::NonFiniteScore { line: 1 })
        ));
        assert!(matches!(
            parse_score_table("# c\n0 1".as_bytes()),
            Err(Error::MalformedLine { line: 2, .. })
        ));
    }

    #[test]
    fn scores_pairs_in_order() {
        let g = g1();
        let cfg = HeuristicConfig::default();
        let reg = ExpertRegistry::new(vec![Expert::heuristic(Heuristic::CommonNeighbors)]).unwrap();
        let sm = score_pairs(&reg, &g, None, &cfg, &[(0, 3), (1, 2)]).unwrap();
        assert_eq!(sm.row(0), vec![2.0, 2.0]);

        let mut table = ScoreTable::default();
        table.insert((1, 2), 0.3).unwrap();
        let reg = ExpertRegistry::new(vec![Expert::external("ext", table)]).unwrap();
        assert!(matches!(
            score_pairs(&reg, &g, None, &cfg, &[(0, 3)]),
            Err(Error::MissingScore { pair: (0, 3), .. })
        ));

        let empty = ExpertRegistry::new(vec![]).unwrap();
        assert!(matches!(
            score_pairs(&empty, &g, None, &cfg, &[(0, 3)]),
            Err(Error::EmptyRegistry)
        ));
    }

    #[test]
    fn reversed_pairs_score_identically() {
        let g = g1();
        let cfg = HeuristicConfig::default();
        let f = FeatureMatrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 0.1], vec![0.0, 3.0], vec![1.5, -1.0]]).unwrap();
        let mlp = Mlp::init(MlpShape::uniform(2, 4, 1, 2).unwrap(), 0.0, &mut seeded_rng(1)).unwrap();
        let mut experts: Vec<Expert> = Heuristic::ALL.iter().map(|&h| Expert::heuristic(h)).collect();
        experts.push(Expert::feature_mlp("mlp", FeatureMlpExpert { mlp }));
        let reg = ExpertRegistry::new(experts).unwrap();
        let a = score_pairs(&reg, &g, Some(&f), &cfg, &[(0, 3), (1, 2)]).unwrap();
        let b = score_pairs(&reg, &g, Some(&f), &cfg, &[(3, 0), (2, 1)]).unwrap();
        for p in 0..2 {
            assert_eq!(a.column(p), b.column(p));
        }
    }

    #[test]
    fn feature_mlp_requires_features() {
        let g = g1();
        let f = FeatureMatrix::new(4, 0, vec![]).unwrap();
        let r = train_feature_mlp_expert(&f, &g, &[(0, 1)], &mut seeded_rng(0), &MlpTrainConfig::default());
        assert!(matches!(r, Err(Error::NoFeatures)));
    }

    #[test]
    fn feature_mlp_checkpoint_round_trip() {
        let mlp = Mlp::init(MlpShape::uniform(3, 4, 1, 2).unwrap(), 0.3, &mut seeded_rng(2)).unwrap();
        let e = FeatureMlpExpert { mlp };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mlp.ckpt");
        e.save(&p).unwrap();
        assert_eq!(FeatureMlpExpert::load(&p).unwrap(), e);
    }

    #[test]
    fn normalizer_zscores_rows() {
        let sm = ScoreMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec![(0, 1), (0, 2), (1, 2)],
            &[vec![1.0, 2.0, 3.0], vec![10.0, 10.0, 10.0]],
        )
        .unwrap();
        let norm = ScoreNormalizer::fit(&sm);
        let z = norm.apply(&sm).unwrap();
        let row = z.row(0);
        assert!((row.iter().sum::<f64>()).abs() < 1e-12);
        assert!(z.row(1).iter().all(|&s| s == 0.0));
    }
}
