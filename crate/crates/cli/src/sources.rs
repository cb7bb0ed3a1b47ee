//! Named score sources for evaluation and analysis.

use std::fmt;
use std::path::PathBuf;

use anyhow::Result;
use linkmoe::ensembles::{mean_ensemble, GlobalWeights};
use linkmoe::eval::{MethodScores, NegScores};
use linkmoe::experts::{load_score_table, score_pairs, ExpertRegistry};
use linkmoe::gating::{EvalSet, LinkMoe};
use linkmoe::graph::{FeatureMatrix, Graph, Pair};
use linkmoe::heuristics::HeuristicConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownSource {
    pub name: String,
    pub available: Vec<String>,
}

impl fmt::Display for UnknownSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown score source {:?}; available: {}",
            self.name,
            self.available.join(", ")
        )
    }
}

impl std::error::Error for UnknownSource {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Expert(String),
    Mean,
    /// Global-ensemble weights file.
    Global(PathBuf),
    /// Gate checkpoint; ranked by the mixed logit.
    Moe(PathBuf),
    /// Score file in `u v score` format.
    File(PathBuf),
}

impl Source {
    pub fn parse(text: &str, registry: Option<&ExpertRegistry>) -> Result<Source> {
        let text = text.trim();
        if let Some((kind, path)) = text.split_once(':') {
            let path = PathBuf::from(path);
            match kind {
                "global" => return Ok(Source::Global(path)),
                "moe" => return Ok(Source::Moe(path)),
                "file" => return Ok(Source::File(path)),
                _ => {}
            }
        }
        if text == "mean" {
            return Ok(Source::Mean);
        }
        if registry.is_some_and(|r| r.get(text).is_some()) {
            return Ok(Source::Expert(text.to_string()));
        }
        let mut available = registry.map(ExpertRegistry::names).unwrap_or_default();
        available.extend(["mean", "global:<weights>", "moe:<checkpoint>", "file:<scores>"].map(String::from));
        Err(UnknownSource {
            name: text.to_string(),
            available,
        }
        .into())
    }

    /// Column name used in reports.
    pub fn label(&self) -> String {
        let stem = |p: &PathBuf| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        };
        match self {
            Source::Expert(name) => name.clone(),
            Source::Mean => "mean".into(),
            Source::Global(p) => format!("global:{}", stem(p)),
            Source::Moe(p) => format!("moe:{}", stem(p)),
            Source::File(p) => format!("file:{}", stem(p)),
        }
    }
}

/// Everything needed to turn a source into per-pair scores.
pub struct Scorer<'a> {
    pub registry: Option<&'a ExpertRegistry>,
    pub graph: &'a Graph,
    pub features: Option<&'a FeatureMatrix>,
    pub hcfg: &'a HeuristicConfig,
}

impl Scorer<'_> {
    fn registry(&self) -> Result<&ExpertRegistry> {
        self.registry.ok_or_else(|| linkmoe::Error::EmptyRegistry.into())
    }

    pub fn scores(&self, src: &Source, pairs: &[Pair]) -> Result<Vec<f64>> {
        let (g, f, h) = (self.graph, self.features, self.hcfg);
        Ok(match src {
            Source::Expert(name) => {
                let reg = self.registry()?.subset(std::slice::from_ref(name))?;
                score_pairs(&reg, g, f, h, pairs)?.row(0)
            }
            Source::Mean => mean_ensemble(&score_pairs(self.registry()?, g, f, h, pairs)?)?,
            Source::Global(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
                let w = GlobalWeights::from_text(&text)?;
                let reg = self.registry()?.subset(&w.expert_names)?;
                w.logits(&score_pairs(&reg, g, f, h, pairs)?)?
            }
            Source::Moe(path) => {
                let model = LinkMoe::load(path)?;
                let reg = self.registry()?.subset(&model.expert_names)?;
                model.predict_logits(&reg, g, f, h, pairs)?
            }
            Source::File(path) => {
                let table = load_score_table(path)?;
                pairs
                    .iter()
                    .map(|&p| {
                        table.get(p).ok_or_else(|| linkmoe::Error::MissingScore {
                            expert: src.label(),
                            pair: p,
                        })
                    })
                    .collect::<linkmoe::Result<Vec<_>>>()?
            }
        })
    }

    /// Scores of the positives and their negatives in `set`.
    pub fn method(&self, src: &Source, set: &EvalSet) -> Result<MethodScores> {
        let pairs = set.all_pairs();
        let mut pos = self.scores(src, &pairs)?;
        let flat = pos.split_off(set.pos.len());
        Ok(MethodScores {
            name: src.label(),
            pos,
            neg: NegScores::from_flat(&set.neg, flat)?,
        })
    }
}
