use rand::seq::SliceRandom;

use super::model::{build_inputs, LinkMoe};
use super::network::{moe_logit, GateArch, GateInput, GateMode, GateNetwork, Standardizer};
use super::split::EvalSet;
use crate::error::{Error, Result};
use crate::eval::{evaluate, NegScores};
use crate::experts::{score_pairs, ExpertRegistry, ScoreMatrix, ScoreNormalizer};
use crate::graph::{FeatureMatrix, Graph, NegativeSet};
use crate::heuristics::{batch_structural, HeuristicConfig};
use crate::nn::{bce_with_logits, derive_seed, seeded_rng, AdamConfig, AdamState, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct GateTrainConfig {
    pub lr: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    pub layers: usize,
    pub hidden: usize,
    pub max_epochs: usize,
    /// Epochs without a new best validation MRR before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Fraction of validation positives used for gate training.
    pub split_ratio: f64,
}

impl Default for GateTrainConfig {
    fn default() -> Self {
        GateTrainConfig {
            lr: 1e-3,
            dropout: 0.0,
            weight_decay: 0.0,
            layers: 2,
            hidden: 32,
            max_epochs: 500,
            patience: 20,
            batch_size: 1024,
            seed: 0,
            split_ratio: super::split::DEFAULT_SPLIT_RATIO,
        }
    }
}

impl GateTrainConfig {
    pub fn arch(&self) -> GateArch {
        GateArch {
            hidden: self.hidden,
            layers: self.layers,
            dropout: self.dropout,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!(
                "learning rate must be finite and non-negative, got {}",
                self.lr
            ));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight decay must be non-negative, got {}", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if self.layers == 0 || self.hidden == 0 {
            return bad("layers and hidden width must be positive".into());
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return bad("max_epochs and batch_size must be positive".into());
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split ratio must lie in (0, 1), got {}", self.split_ratio));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            weight_decay: self.weight_decay,
            ..AdamConfig::with_lr(self.lr)
        }
    }
}

/// Gate inputs and expert scores for one side (positives or negatives).
#[derive(Debug, Clone, PartialEq)]
pub struct GateBatch {
    pub inputs: Vec<GateInput>,
    pub scores: ScoreMatrix,
}

/// Everything needed to train or validate the gate on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct GateData {
    pub pos: GateBatch,
    pub neg: GateBatch,
    /// Layout of `neg`, used to rank positives against the right negatives.
    pub neg_set: NegativeSet,
}

impl GateData {
    /// Ranks positives by `score` (one value per pair).
    pub fn mrr_of(&self, pos: Vec<f64>, neg: Vec<f64>) -> Result<f64> {
        Ok(evaluate(&pos, &NegScores::from_flat(&self.neg_set, neg)?, &[])?.mrr)
    }
}

/// Gate-train and gate-val data with the statistics fit on gate-train.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedGateData {
    pub mode: GateMode,
    pub train: GateData,
    pub val: GateData,
    pub standardizer: Standardizer,
    pub score_norm: Option<ScoreNormalizer>,
    pub feature_dim: Option<usize>,
}

impl PreparedGateData {
    pub fn expert_names(&self) -> &[String] {
        self.train.pos.scores.expert_names()
    }
}

/// Whether `mode` wants the feature branch given the data at hand.
pub fn mode_uses_features(mode: GateMode, features: Option<&FeatureMatrix>) -> Result<bool> {
    let has = features.is_some_and(|f| f.dim() > 0);
    match mode {
        GateMode::OnlyFeat if !has => Err(Error::ModeInputMismatch {
            mode: mode.to_string(),
            reason: "feature branch requested but no node features supplied".into(),
        }),
        GateMode::OnlyFeat => Ok(true),
        GateMode::All => Ok(has),
        _ => Ok(false),
    }
}

/// Computes heuristics and expert scores for both gate splits, fits the
/// standardizer (and optional score normalizer) on gate-train pairs.
#[allow(clippy::too_many_arguments)]
pub fn prepare_gate_data(
    registry: &ExpertRegistry,
    g: &Graph,
    features: Option<&FeatureMatrix>,
    hcfg: &HeuristicConfig,
    train_set: &EvalSet,
    val_set: &EvalSet,
    mode: GateMode,
    normalize_scores: bool,
) -> Result<PreparedGateData> {
    let with_features = mode_uses_features(mode, features)?;
    let train_pairs = train_set.all_pairs();
    let val_pairs = val_set.all_pairs();
    let train_struct = batch_structural(g, hcfg, &train_pairs)?;
    let val_struct = batch_structural(g, hcfg, &val_pairs)?;
    let standardizer = Standardizer::fit(&train_struct);

    let train_scores = score_pairs(registry, g, features, hcfg, &train_pairs)?;
    let val_scores = score_pairs(registry, g, features, hcfg, &val_pairs)?;
    let score_norm = normalize_scores.then(|| ScoreNormalizer::fit(&train_scores));
    let (train_scores, val_scores) = match &score_norm {
        Some(n) => (n.apply(&train_scores)?, n.apply(&val_scores)?),
        None => (train_scores, val_scores),
    };

    let assemble = |set: &EvalSet, structural, pairs: &[_], scores: ScoreMatrix| -> Result<GateData> {
        let mut inputs = build_inputs(structural, &standardizer, features, pairs, with_features)?;
        let n_pos = set.pos.len();
        let neg_inputs = inputs.split_off(n_pos);
        let pos_idx: Vec<usize> = (0..n_pos).collect();
        let neg_idx: Vec<usize> = (n_pos..pairs.len()).collect();
        Ok(GateData {
            pos: GateBatch {
                inputs,
                scores: scores.select_pairs(&pos_idx),
            },
            neg: GateBatch {
                inputs: neg_inputs,
                scores: scores.select_pairs(&neg_idx),
            },
            neg_set: set.neg.clone(),
        })
    };
    let train = assemble(train_set, &train_struct, &train_pairs, train_scores)?;
    let val = assemble(val_set, &val_struct, &val_pairs, val_scores)?;
    Ok(PreparedGateData {
        mode,
        train,
        val,
        standardizer,
        score_norm,
        feature_dim: if with_features {
            features.map(FeatureMatrix::dim)
        } else {
            None
        },
    })
}

/// One labeled training example for the gate.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub input: &'a GateInput,
    pub scores: &'a [f64],
    pub label: f64,
}

fn per_sample_losses(
    gate: &GateNetwork,
    samples: &[Sample],
    mut rng: Option<&mut Rng>,
    grads: &mut [f64],
) -> Result<Vec<f64>> {
    let scale = 1.0 / samples.len().max(1) as f64;
    let mut losses = Vec::with_capacity(samples.len());
    let mut gw = vec![0.0; gate.m];
    for s in samples {
        if s.scores.len() != gate.m {
            return Err(Error::DimMismatch {
                expected: gate.m,
                found: s.scores.len(),
            });
        }
        let (w, tape) = gate.forward(s.input, rng.as_deref_mut())?;
        let (loss, dz) = bce_with_logits(moe_logit(&w, s.scores), s.label);
        for (g, &e) in gw.iter_mut().zip(s.scores) {
            *g = dz * e * scale;
        }
        gate.backward(&tape, &gw, grads)?;
        losses.push(loss);
    }
    Ok(losses)
}

/// Mean cross-entropy of the mixed logit over `samples` and its gradient
/// with respect to the gate parameters. `Some(rng)` enables dropout.
pub fn gate_loss(gate: &GateNetwork, samples: &[Sample], rng: Option<&mut Rng>) -> Result<(f64, Vec<f64>)> {
    let mut grads = vec![0.0; gate.params.len()];
    let losses = per_sample_losses(gate, samples, rng, &mut grads)?;
    Ok((losses.iter().sum::<f64>() / samples.len().max(1) as f64, grads))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mrr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned; the earliest maximum of val MRR.
    pub best_epoch: usize,
    pub best_val_mrr: f64,
}

impl TrainHistory {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,train_loss,val_mrr")?;
        for r in &self.epochs {
            writeln!(w, "{},{:.6},{:.6}", r.epoch, r.train_loss, r.val_mrr)?;
        }
        Ok(())
    }
}

/// Tracks the best validation score and when to stop.
#[derive(Debug, Clone)]
pub(crate) struct EarlyStopper {
    patience: usize,
    pub best_epoch: usize,
    pub best_score: f64,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> EarlyStopper {
        EarlyStopper {
            patience,
            best_epoch: 0,
            best_score: f64::NEG_INFINITY,
        }
    }

    /// Records an epoch; returns true when it is a new best.
    pub fn observe(&mut self, epoch: usize, score: f64) -> bool {
        if score > self.best_score {
            self.best_score = score;
            self.best_epoch = epoch;
            true
        } else {
            false
        }
    }

    pub fn should_stop(&self, epoch: usize) -> bool {
        epoch - self.best_epoch >= self.patience
    }
}

pub(crate) fn labeled_samples(data: &GateData) -> Vec<Sample<'_>> {
    let pos = data
        .pos
        .inputs
        .iter()
        .zip(data.pos.scores.columns())
        .map(|(input, scores)| Sample {
            input,
            scores,
            label: 1.0,
        });
    let neg = data
        .neg
        .inputs
        .iter()
        .zip(data.neg.scores.columns())
        .map(|(input, scores)| Sample {
            input,
            scores,
            label: 0.0,
        });
    pos.chain(neg).collect()
}

/// Validation MRR of `gate`, ranking by mixed logit.
pub fn gate_val_mrr(gate: &GateNetwork, data: &GateData) -> Result<f64> {
    use rayon::prelude::*;
    let logits = |b: &GateBatch| -> Result<Vec<f64>> {
        b.inputs
            .par_iter()
            .zip(b.scores.columns().collect::<Vec<_>>())
            .map(|(input, s)| Ok(moe_logit(&gate.weights(input)?, s)))
            .collect()
    };
    data.mrr_of(logits(&data.pos)?, logits(&data.neg)?)
}

/// Minimizes the mixed-logit cross-entropy over gate parameters with Adam,
/// keeping the parameters of the epoch with the best gate-val MRR.
pub fn train_gate(
    mut gate: GateNetwork,
    train: &GateData,
    val: &GateData,
    cfg: &GateTrainConfig,
) -> Result<(GateNetwork, TrainHistory)> {
    cfg.validate()?;
    if train.neg.inputs.is_empty() {
        return Err(Error::NoNegatives);
    }
    if train.pos.inputs.is_empty() {
        return Err(Error::EmptyPositives);
    }
    let samples = labeled_samples(train);
    let mut rng = seeded_rng(derive_seed(cfg.seed, "gate-train"));
    let mut adam = AdamState::new(cfg.adam(), gate.params.len());
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut losses = vec![0.0; samples.len()];
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best_params = gate.params.clone();
    let mut history = TrainHistory::default();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Sample> = chunk.iter().map(|&k| samples[k]).collect();
            let mut grads = vec![0.0; gate.params.len()];
            let batch_losses = per_sample_losses(&gate, &batch, Some(&mut rng), &mut grads)?;
            for (&k, l) in chunk.iter().zip(batch_losses) {
                losses[k] = l;
            }
            adam.step(&mut gate.params, &grads)?;
        }
        let train_loss = losses.iter().sum::<f64>() / losses.len() as f64;
        let val_mrr = gate_val_mrr(&gate, val)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_mrr,
        });
        if stopper.observe(epoch, val_mrr) {
            best_params.clone_from(&gate.params);
        }
        if stopper.should_stop(epoch) {
            break;
        }
    }
    gate.params = best_params;
    history.best_epoch = stopper.best_epoch;
    history.best_val_mrr = stopper.best_score;
    Ok((gate, history))
}

/// Initializes and trains a gate on prepared data.
pub fn fit_link_moe(prep: &PreparedGateData, cfg: &GateTrainConfig) -> Result<(LinkMoe, TrainHistory)> {
    cfg.validate()?;
    let mut init_rng = seeded_rng(derive_seed(cfg.seed, "gate-init"));
    let gate = GateNetwork::new(
        prep.mode,
        prep.expert_names().len(),
        prep.feature_dim,
        &cfg.arch(),
        &mut init_rng,
    )?;
    let (gate, history) = train_gate(gate, &prep.train, &prep.val, cfg)?;
    Ok((
        LinkMoe {
            gate,
            standardizer: prep.standardizer.clone(),
            score_norm: prep.score_norm.clone(),
            expert_names: prep.expert_names().to_vec(),
        },
        history,
    ))
}
