//! Seeded synthetic datasets for tests, benchmarks and demos.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::experts::{write_scores, ScoreTable};
use crate::graph::{canonical, EdgeSplit, FeatureMatrix, Graph, NegativeSet, Pair};
use crate::heuristics::common_neighbors;
use crate::nn::{derive_seed, seeded_rng, Rng};

/// Edges of G(n, p), each unordered pair kept independently with probability `p`.
pub fn erdos_renyi_pairs(n: usize, p: f64, rng: &mut Rng) -> Vec<Pair> {
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    pairs
}

pub fn erdos_renyi(n: usize, p: f64, rng: &mut Rng) -> Graph {
    Graph::from_pairs(&erdos_renyi_pairs(n, p, rng), n).expect("generated pairs are in range")
}

/// Shape of the two-regime dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub nodes: usize,
    pub avg_degree: f64,
    /// Node types; regime-B positives join nodes of equal type.
    pub types: usize,
    /// Positives per regime in each of validation and test.
    pub pos_per_regime: usize,
    /// Shared negatives per evaluation split, half from each regime.
    pub negatives: usize,
    /// Mean score separation of an expert inside its own regime.
    pub signal: f64,
    pub noise_sd: f64,
    /// Spread of an expert's scores outside its regime.
    pub off_regime_sd: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            nodes: 400,
            avg_degree: 6.0,
            types: 8,
            pos_per_regime: 100,
            negatives: 300,
            signal: 1.5,
            noise_sd: 1.0,
            off_regime_sd: 3.0,
        }
    }
}

/// Graph where evaluated pairs fall into two regimes: pairs with common
/// neighbors (regime A) and pairs without (regime B). Expert A separates
/// positives from negatives only in regime A, expert B only in regime B;
/// outside its regime each expert emits wide noise.
#[derive(Debug, Clone)]
pub struct PlantedDataset {
    pub n: usize,
    pub split: EdgeSplit,
    pub features: FeatureMatrix,
    pub expert_a: ScoreTable,
    pub expert_b: ScoreTable,
}

pub const PLANTED_EXPERT_A: &str = "expert_a";
pub const PLANTED_EXPERT_B: &str = "expert_b";

struct Sampler<'a> {
    g: &'a Graph,
    types: &'a [usize],
    by_type: Vec<Vec<usize>>,
    used: HashSet<Pair>,
    rng: Rng,
}

impl Sampler<'_> {
    fn fresh(&mut self, (u, v): Pair) -> bool {
        u != v && !self.g.has_edge(u, v) && self.used.insert(canonical((u, v)))
    }

    /// Two non-adjacent neighbors of a common node.
    fn with_common_neighbor(&mut self) -> Result<Pair> {
        for _ in 0..100_000 {
            let w = self.rng.gen_range(0..self.g.node_count());
            let nb = self.g.neighbors(w);
            if nb.len() < 2 {
                continue;
            }
            let pick: Vec<usize> = nb.choose_multiple(&mut self.rng, 2).copied().collect();
            let pair = (pick[0], pick[1]);
            if self.fresh(pair) {
                return Ok(pair);
            }
        }
        Err(Error::InvalidConfig(
            "planted graph is too sparse for common-neighbor pairs".into(),
        ))
    }

    /// A pair with no common neighbor, optionally of equal type.
    fn without_common_neighbor(&mut self, same_type: bool) -> Result<Pair> {
        let n = self.g.node_count();
        for _ in 0..100_000 {
            let u = self.rng.gen_range(0..n);
            let v = if same_type {
                *self.by_type[self.types[u]].choose(&mut self.rng).unwrap()
            } else {
                self.rng.gen_range(0..n)
            };
            if u == v || self.g.has_edge(u, v) || common_neighbors(self.g, u, v)? > 0 {
                continue;
            }
            if self.fresh((u, v)) {
                return Ok((u, v));
            }
        }
        Err(Error::InvalidConfig(
            "planted graph is too dense for pairs without common neighbors".into(),
        ))
    }
}

/// Builds the dataset deterministically from `seed`.
pub fn planted_two_regime(cfg: &PlantedConfig, seed: u64) -> Result<PlantedDataset> {
    let n = cfg.nodes;
    if n < 4 || cfg.types == 0 || cfg.pos_per_regime == 0 || cfg.negatives < 2 {
        return Err(Error::InvalidConfig("planted dataset is too small".into()));
    }
    let mut rng = seeded_rng(derive_seed(seed, "planted-graph"));
    let p = (cfg.avg_degree / (n - 1) as f64).min(1.0);
    let train_pos = erdos_renyi_pairs(n, p, &mut rng);
    let g = Graph::from_pairs(&train_pos, n)?;
    let types: Vec<usize> = (0..n).map(|_| rng.gen_range(0..cfg.types)).collect();
    let mut by_type = vec![Vec::new(); cfg.types];
    for (v, &t) in types.iter().enumerate() {
        by_type[t].push(v);
    }
    let features = {
        let mut rows = Vec::with_capacity(n);
        for &t in &types {
            let mut row: Vec<f64> = (0..cfg.types).map(|_| rng.gen_range(-0.1..0.1)).collect();
            row[t] += 1.0;
            rows.push(row);
        }
        FeatureMatrix::from_rows(&rows)?
    };

    let mut s = Sampler {
        g: &g,
        types: &types,
        by_type,
        used: HashSet::new(),
        rng: seeded_rng(derive_seed(seed, "planted-pairs")),
    };
    let mut eval_set = || -> Result<(Vec<Pair>, Vec<Pair>)> {
        let mut pos = Vec::with_capacity(2 * cfg.pos_per_regime);
        for _ in 0..cfg.pos_per_regime {
            pos.push(s.with_common_neighbor()?);
            pos.push(s.without_common_neighbor(true)?);
        }
        let mut neg = Vec::with_capacity(cfg.negatives);
        for k in 0..cfg.negatives {
            neg.push(if k % 2 == 0 {
                s.with_common_neighbor()?
            } else {
                s.without_common_neighbor(false)?
            });
        }
        Ok((pos, neg))
    };
    let (valid_pos, valid_neg) = eval_set()?;
    let (test_pos, test_neg) = eval_set()?;

    let mut noise = seeded_rng(derive_seed(seed, "planted-scores"));
    let mut expert_a = ScoreTable::default();
    let mut expert_b = ScoreTable::default();
    let labeled = valid_pos
        .iter()
        .chain(&test_pos)
        .map(|&p| (p, 1.0))
        .chain(valid_neg.iter().chain(&test_neg).map(|&p| (p, -1.0)));
    for ((u, v), sign) in labeled {
        let regime_a = common_neighbors(&g, u, v)? > 0;
        let mut draw = |own_regime: bool| -> f64 {
            let z: f64 = StandardNormal.sample(&mut noise);
            if own_regime {
                sign * cfg.signal + cfg.noise_sd * z
            } else {
                cfg.off_regime_sd * z
            }
        };
        let a = draw(regime_a);
        let b = draw(!regime_a);
        expert_a.insert((u, v), a)?;
        expert_b.insert((u, v), b)?;
    }

    Ok(PlantedDataset {
        n,
        split: EdgeSplit {
            train_pos,
            valid_pos,
            test_pos,
            valid_neg: NegativeSet::Shared(valid_neg),
            test_neg: NegativeSet::Shared(test_neg),
        },
        features,
        expert_a,
        expert_b,
    })
}

impl PlantedDataset {
    pub fn training_graph(&self) -> Graph {
        self.split
            .training_graph(self.n, false)
            .expect("planted split is valid")
    }

    /// Writes `graph.txt`, `features.txt`, the split files and one score
    /// file per expert (`expert_a.scores`, `expert_b.scores`) into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.split.write_dir(dir)?;
        let create = |name: &str| -> Result<(std::path::PathBuf, BufWriter<File>)> {
            let path = dir.join(name);
            let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
            Ok((path, BufWriter::new(f)))
        };
        let (path, mut f) = create("graph.txt")?;
        writeln!(f, "n={}", self.n)
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(&path, e))?;
        let (path, mut f) = create("features.txt")?;
        self.features
            .write(&mut f)
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(&path, e))?;
        let pairs: Vec<Pair> = self
            .split
            .valid_pos
            .iter()
            .chain(&self.split.test_pos)
            .copied()
            .chain(self.split.valid_neg.all_pairs())
            .chain(self.split.test_neg.all_pairs())
            .collect();
        for (name, table) in [(PLANTED_EXPERT_A, &self.expert_a), (PLANTED_EXPERT_B, &self.expert_b)] {
            let (path, mut f) = create(&format!("{name}.scores"))?;
            let scores: Vec<f64> = pairs.iter().map(|&p| table.get(p).unwrap()).collect();
            write_scores(&mut f, &pairs, &scores)
                .and_then(|_| f.flush())
                .map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
