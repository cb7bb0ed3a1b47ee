use std::path::Path;

use super::network::{moe_logit, GateArch, GateInput, GateMode, GateNetwork, Standardizer};
use crate::error::{Error, Result};
use crate::experts::{score_pairs, ExpertRegistry, ScoreMatrix, ScoreNormalizer};
use crate::graph::{FeatureMatrix, Graph, Pair};
use crate::heuristics::{batch_structural, pair_feature, HeuristicConfig, StructuralVector, NUM_STRUCTURAL};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::{sigmoid, MlpShape};

pub const GATE_CHECKPOINT_KIND: u8 = 1;

/// Gate inputs for `pairs`; pair features are attached only when
/// `with_features` is set.
pub fn build_inputs(
    structural: &[StructuralVector],
    standardizer: &Standardizer,
    features: Option<&FeatureMatrix>,
    pairs: &[Pair],
    with_features: bool,
) -> Result<Vec<GateInput>> {
    if structural.len() != pairs.len() {
        return Err(Error::DimMismatch {
            expected: pairs.len(),
            found: structural.len(),
        });
    }
    let features = match (with_features, features) {
        (true, None) => return Err(Error::NoFeatures),
        (true, Some(f)) => Some(f),
        (false, _) => None,
    };
    structural
        .iter()
        .zip(pairs)
        .map(|(s, &(i, j))| {
            let feature = features.map(|f| pair_feature(f, i, j)).transpose()?;
            Ok(GateInput {
                structural: standardizer.apply(s),
                feature,
            })
        })
        .collect()
}

/// A trained gate together with everything needed to score new pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMoe {
    pub gate: GateNetwork,
    pub standardizer: Standardizer,
    /// Present when expert scores were z-scored before mixing.
    pub score_norm: Option<ScoreNormalizer>,
    pub expert_names: Vec<String>,
}

impl LinkMoe {
    /// Gate inputs for `pairs` on `g`.
    pub fn inputs(
        &self,
        g: &Graph,
        features: Option<&FeatureMatrix>,
        hcfg: &HeuristicConfig,
        pairs: &[Pair],
    ) -> Result<Vec<GateInput>> {
        let structural = batch_structural(g, hcfg, pairs)?;
        build_inputs(
            &structural,
            &self.standardizer,
            features,
            pairs,
            self.gate.uses_features(),
        )
    }

    /// Applies the stored score normalization, if any.
    pub fn prepare_scores(&self, scores: &ScoreMatrix) -> Result<ScoreMatrix> {
        if scores.expert_names() != self.expert_names.as_slice() {
            return Err(Error::InvalidConfig(format!(
                "gate was trained on experts [{}] but scores cover [{}]",
                self.expert_names.join(","),
                scores.expert_names().join(",")
            )));
        }
        match &self.score_norm {
            Some(n) => n.apply(scores),
            None => Ok(scores.clone()),
        }
    }

    /// Mixed logits from already prepared scores and inputs.
    pub fn logits(&self, scores: &ScoreMatrix, inputs: &[GateInput]) -> Result<Vec<f64>> {
        if scores.num_pairs() != inputs.len() {
            return Err(Error::DimMismatch {
                expected: inputs.len(),
                found: scores.num_pairs(),
            });
        }
        use rayon::prelude::*;
        inputs
            .par_iter()
            .enumerate()
            .map(|(p, input)| Ok(moe_logit(&self.gate.weights(input)?, scores.column(p))))
            .collect()
    }

    /// End-to-end logits: heuristics, standardize, gate, mix.
    pub fn predict_logits(
        &self,
        registry: &ExpertRegistry,
        g: &Graph,
        features: Option<&FeatureMatrix>,
        hcfg: &HeuristicConfig,
        pairs: &[Pair],
    ) -> Result<Vec<f64>> {
        let inputs = self.inputs(g, features, hcfg, pairs)?;
        let scores = self.prepare_scores(&score_pairs(registry, g, features, hcfg, pairs)?)?;
        self.logits(&scores, &inputs)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let gate = &self.gate;
        let mut shapes = Vec::new();
        for s in gate.struct_branch.iter().chain(gate.feat_branch.iter()) {
            shapes.push(s.dims().to_vec());
        }
        shapes.push(gate.head.dims().to_vec());
        let mut aux = vec![gate.dropout];
        aux.extend(self.standardizer.mean);
        aux.extend(self.standardizer.std);
        if let Some(n) = &self.score_norm {
            aux.extend(&n.mean);
            aux.extend(&n.std);
        }
        Checkpoint {
            kind: GATE_CHECKPOINT_KIND,
            meta: vec![
                gate.mode.to_code(),
                gate.m as u32,
                gate.struct_branch.is_some() as u32,
                gate.feat_branch.is_some() as u32,
                self.score_norm.is_some() as u32,
            ],
            names: self.expert_names.clone(),
            shapes,
            params: gate.params.clone(),
            aux,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<LinkMoe> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_string());
        if ck.kind != GATE_CHECKPOINT_KIND {
            return Err(bad("not a gate checkpoint"));
        }
        let [mode, m, has_struct, has_feat, has_norm] = ck.meta[..] else {
            return Err(bad("gate metadata has the wrong length"));
        };
        let mode = GateMode::from_code(mode)?;
        let m = m as usize;
        if ck.names.len() != m {
            return Err(bad("expert name count differs from gate width"));
        }
        let expected_shapes = has_struct as usize + has_feat as usize + 1;
        if ck.shapes.len() != expected_shapes {
            return Err(bad("gate network count differs from metadata"));
        }
        let mut shapes = ck
            .shapes
            .iter()
            .map(|d| MlpShape::new(d.clone()))
            .collect::<Result<Vec<_>>>()?
            .into_iter();
        let struct_branch = if has_struct == 1 { shapes.next() } else { None };
        let feat_branch = if has_feat == 1 { shapes.next() } else { None };
        let head = shapes.next().unwrap();
        if head.output_dim() != m {
            return Err(bad("fusion head width differs from expert count"));
        }
        let n_params = struct_branch
            .iter()
            .chain(feat_branch.iter())
            .chain(std::iter::once(&head))
            .map(MlpShape::param_count)
            .sum::<usize>();
        if ck.params.len() != n_params {
            return Err(bad("parameter count differs from network shapes"));
        }
        let norm_len = if has_norm == 1 { 2 * m } else { 0 };
        if ck.aux.len() != 1 + 2 * NUM_STRUCTURAL + norm_len {
            return Err(bad("auxiliary statistics have the wrong length"));
        }
        let mut standardizer = Standardizer::identity();
        standardizer.mean.copy_from_slice(&ck.aux[1..1 + NUM_STRUCTURAL]);
        standardizer
            .std
            .copy_from_slice(&ck.aux[1 + NUM_STRUCTURAL..1 + 2 * NUM_STRUCTURAL]);
        let score_norm = (has_norm == 1).then(|| {
            let rest = &ck.aux[1 + 2 * NUM_STRUCTURAL..];
            ScoreNormalizer {
                mean: rest[..m].to_vec(),
                std: rest[m..].to_vec(),
            }
        });
        Ok(LinkMoe {
            gate: GateNetwork {
                mode,
                m,
                struct_branch,
                feat_branch,
                head,
                params: ck.params.clone(),
                dropout: ck.aux[0],
            },
            standardizer,
            score_norm,
            expert_names: ck.names.clone(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_checkpoint().write(file).map_err(|e| e.at(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LinkMoe> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::read(std::io::BufReader::new(file))
            .and_then(|ck| LinkMoe::from_checkpoint(&ck))
            .map_err(|e| e.at(path))
    }

    /// Zero-parameter gate over `expert_names`, for tests and baselines.
    pub fn uniform(
        mode: GateMode,
        expert_names: Vec<String>,
        feature_dim: Option<usize>,
        arch: &GateArch,
    ) -> Result<LinkMoe> {
        Ok(LinkMoe {
            gate: GateNetwork::zeros(mode, expert_names.len(), feature_dim, arch)?,
            standardizer: Standardizer::identity(),
            score_norm: None,
            expert_names,
        })
    }
}

/// End-to-end probabilities `sigmoid(sum_o G(h)_o E_o)`, in pair order.
pub fn predict_pairs(
    model: &LinkMoe,
    registry: &ExpertRegistry,
    g: &Graph,
    features: Option<&FeatureMatrix>,
    hcfg: &HeuristicConfig,
    pairs: &[Pair],
) -> Result<Vec<f64>> {
    Ok(model
        .predict_logits(registry, g, features, hcfg, pairs)?
        .into_iter()
        .map(sigmoid)
        .collect())
}
