//! Run configuration and dataset ingestion.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use linkmoe::experts::{ExpertDecl, ExpertRegistry};
use linkmoe::gating::EvalSet;
use linkmoe::graph::{canonical, load_features, load_node_count, load_split, EdgeSplit, FeatureMatrix, Graph, Pair};
use linkmoe::heuristics::HeuristicConfig;

use crate::cli::{CommonArgs, EvalSplit};
use crate::config::Resolver;

#[derive(Debug, Clone, PartialEq)]
pub struct DataPaths {
    pub graph: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub split: PathBuf,
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataPaths,
    pub experts: Vec<ExpertDecl>,
    pub heuristics: HeuristicConfig,
    pub include_valid: bool,
    pub out: PathBuf,
    pub seed: u64,
}

fn require(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(linkmoe::Error::MissingFile(path.display().to_string()).into());
    }
    Ok(())
}

impl RunConfig {
    /// Resolves the shared settings. `experts` is `None` for commands that
    /// take no expert declarations.
    pub fn resolve(r: &mut Resolver, c: &CommonArgs, experts: Option<&[String]>) -> Result<RunConfig> {
        let data_dir = r.path("data", c.data.clone());
        let graph = r.path("graph", c.graph.clone()).or_else(|| {
            let p = data_dir.as_ref()?.join("graph.txt");
            p.exists().then_some(p)
        });
        let features = r.path("features", c.features.clone()).or_else(|| {
            let p = data_dir.as_ref()?.join("features.txt");
            p.exists().then_some(p)
        });
        let Some(split) = r.path("split", c.split.clone()).or_else(|| data_dir.clone()) else {
            bail!("no dataset given; pass --data DIR or --split DIR");
        };
        let nodes = r.value("nodes", c.nodes)?;
        for p in [&graph, &features].into_iter().flatten() {
            require(p)?;
        }
        require(&split)?;
        if graph.is_none() && nodes.is_none() {
            bail!("node count unknown; provide a graph header (graph.txt) or --nodes");
        }
        if let Some(d) = &data_dir {
            r.record("data", d.display());
        }
        if let Some(g) = &graph {
            r.record("graph", g.display());
        }
        if let Some(f) = &features {
            r.record("features", f.display());
        }
        r.record("split", split.display());

        let experts = match experts {
            Some(flag) => {
                let decls = r.experts(flag)?;
                for d in &decls {
                    if let ExpertDecl::External { path, .. } | ExpertDecl::FeatureMlp { path, .. } = d {
                        require(path)?;
                    }
                }
                decls
            }
            None => Vec::new(),
        };
        let Some(out) = r.path("out", c.out.clone()) else {
            bail!("no output directory; pass --out DIR");
        };
        Ok(RunConfig {
            data: DataPaths {
                graph,
                features,
                split,
                nodes,
            },
            experts,
            heuristics: r.heuristics(&c.heuristics)?,
            include_valid: r.switch("include_valid_in_graph", c.include_valid_in_graph)?,
            out,
            seed: r.or("seed", c.seed, 0)?,
        })
    }

    pub fn load(&self) -> Result<Dataset> {
        let n = match (&self.data.graph, self.data.nodes) {
            (Some(g), Some(n)) => {
                let header = load_node_count(g)?;
                if header != n {
                    bail!("--nodes {n} disagrees with graph header n={header}");
                }
                n
            }
            (Some(g), None) => load_node_count(g)?,
            (None, Some(n)) => n,
            (None, None) => bail!("node count unknown"),
        };
        let split = load_split(&self.data.split)?;
        split.validate(n)?;
        let graph = split.training_graph(n, self.include_valid)?;
        let features = match &self.data.features {
            Some(p) => Some(load_features(p, n)?),
            None => None,
        };
        Ok(Dataset {
            n,
            split,
            graph,
            features,
        })
    }

    pub fn registry(&self) -> Result<ExpertRegistry> {
        if self.experts.is_empty() {
            bail!(linkmoe::Error::EmptyRegistry);
        }
        Ok(linkmoe::experts::register_experts(&self.experts)?)
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub n: usize,
    pub split: EdgeSplit,
    /// Graph heuristics and structural experts are computed on.
    pub graph: Graph,
    pub features: Option<FeatureMatrix>,
}

impl Dataset {
    pub fn eval_set(&self, which: EvalSplit) -> EvalSet {
        match which {
            EvalSplit::Valid => EvalSet {
                pos: self.split.valid_pos.clone(),
                neg: self.split.valid_neg.clone(),
            },
            EvalSplit::Test => EvalSet {
                pos: self.split.test_pos.clone(),
                neg: self.split.test_neg.clone(),
            },
        }
    }

    /// Validation and test pairs, positives and negatives, first occurrence
    /// of each unordered pair kept.
    pub fn eval_pairs(&self) -> Vec<Pair> {
        let s = &self.split;
        let mut seen = HashSet::new();
        s.valid_pos
            .iter()
            .copied()
            .chain(s.valid_neg.all_pairs())
            .chain(s.test_pos.iter().copied())
            .chain(s.test_neg.all_pairs())
            .filter(|&p| seen.insert(canonical(p)))
            .collect()
    }

    pub fn features(&self) -> Option<&FeatureMatrix> {
        self.features.as_ref()
    }
}
