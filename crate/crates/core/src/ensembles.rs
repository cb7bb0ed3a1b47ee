//! Ensemble baselines with one weight vector shared by every pair.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::experts::ScoreMatrix;
use crate::gating::{EarlyStopper, EpochRecord, GateData, TrainHistory};
use crate::nn::{bce_with_logits, derive_seed, seeded_rng, sigmoid, AdamConfig, AdamState};

/// Per-pair mean of the raw expert scores.
pub fn mean_ensemble(scores: &ScoreMatrix) -> Result<Vec<f64>> {
    let m = scores.num_experts();
    if m == 0 {
        return Err(Error::EmptyRegistry);
    }
    Ok(scores.columns().map(|c| c.iter().sum::<f64>() / m as f64).collect())
}

/// Learned mixing weights, unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalWeights {
    pub expert_names: Vec<String>,
    pub w: Vec<f64>,
}

impl GlobalWeights {
    pub fn uniform(expert_names: Vec<String>) -> GlobalWeights {
        let m = expert_names.len();
        GlobalWeights {
            expert_names,
            w: vec![1.0 / m as f64; m],
        }
    }

    fn check(&self, scores: &ScoreMatrix) -> Result<()> {
        if scores.num_experts() != self.w.len() {
            return Err(Error::DimMismatch {
                expected: self.w.len(),
                found: scores.num_experts(),
            });
        }
        Ok(())
    }

    /// `w . column` per pair.
    pub fn logits(&self, scores: &ScoreMatrix) -> Result<Vec<f64>> {
        self.check(scores)?;
        Ok(scores
            .columns()
            .map(|c| c.iter().zip(&self.w).map(|(s, w)| s * w).sum())
            .collect())
    }

    /// The weight vector applied to each pair; identical rows by construction.
    pub fn per_pair_weights(&self, scores: &ScoreMatrix) -> Result<Vec<Vec<f64>>> {
        self.check(scores)?;
        Ok(vec![self.w.clone(); scores.num_pairs()])
    }

    /// `name weight` lines.
    pub fn to_text(&self) -> String {
        self.expert_names
            .iter()
            .zip(&self.w)
            .map(|(n, w)| format!("{n} {w}\n"))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<GlobalWeights> {
        let mut out = GlobalWeights {
            expert_names: Vec::new(),
            w: Vec::new(),
        };
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: &str| Error::MalformedLine {
                line: k + 1,
                reason: reason.into(),
            };
            let mut it = line.split_whitespace();
            let (Some(name), Some(w), None) = (it.next(), it.next(), it.next()) else {
                return Err(malformed("expected `name weight`"));
            };
            let w: f64 = w.parse().map_err(|_| malformed("bad weight"))?;
            if !w.is_finite() {
                return Err(Error::NonFiniteValue { line: k + 1 });
            }
            out.expert_names.push(name.to_string());
            out.w.push(w);
        }
        if out.w.is_empty() {
            return Err(Error::EmptyRegistry);
        }
        Ok(out)
    }
}

/// `sigmoid(w . column)` per pair.
pub fn global_ensemble_predict(w: &GlobalWeights, scores: &ScoreMatrix) -> Result<Vec<f64>> {
    Ok(w.logits(scores)?.into_iter().map(sigmoid).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for EnsembleTrainConfig {
    fn default() -> Self {
        EnsembleTrainConfig {
            lr: 1e-2,
            weight_decay: 0.0,
            max_epochs: 500,
            patience: 20,
            batch_size: 1024,
            seed: 0,
        }
    }
}

/// Mean cross-entropy of `sigmoid(w . s)` over labeled columns, and its gradient.
pub fn global_loss(w: &[f64], columns: &[(&[f64], f64)]) -> (f64, Vec<f64>) {
    let n = columns.len().max(1) as f64;
    let mut grad = vec![0.0; w.len()];
    let mut loss = 0.0;
    for &(s, y) in columns {
        let z: f64 = s.iter().zip(w).map(|(a, b)| a * b).sum();
        let (l, dz) = bce_with_logits(z, y);
        loss += l;
        for (g, a) in grad.iter_mut().zip(s) {
            *g += dz * a / n;
        }
    }
    (loss / n, grad)
}

fn labeled_columns(data: &GateData) -> Vec<(&[f64], f64)> {
    data.pos
        .scores
        .columns()
        .map(|c| (c, 1.0))
        .chain(data.neg.scores.columns().map(|c| (c, 0.0)))
        .collect()
}

/// Logistic regression on expert scores, starting from `w = 1/m`, with early
/// stopping on the validation MRR. Uses the same re-split as the gate.
pub fn train_global_ensemble(
    train: &GateData,
    val: &GateData,
    cfg: &EnsembleTrainConfig,
) -> Result<(GlobalWeights, TrainHistory)> {
    if train.neg.scores.num_pairs() == 0 {
        return Err(Error::NoNegatives);
    }
    if cfg.max_epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::InvalidConfig(
            "max_epochs and batch_size must be positive".into(),
        ));
    }
    let names = train.pos.scores.expert_names().to_vec();
    let mut weights = GlobalWeights::uniform(names);
    let columns = labeled_columns(train);
    let mut rng = seeded_rng(derive_seed(cfg.seed, "global-ensemble"));
    let mut adam = AdamState::new(
        AdamConfig {
            weight_decay: cfg.weight_decay,
            ..AdamConfig::with_lr(cfg.lr)
        },
        weights.w.len(),
    );
    let mut order: Vec<usize> = (0..columns.len()).collect();
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best = weights.w.clone();
    let mut history = TrainHistory::default();
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&[f64], f64)> = chunk.iter().map(|&k| columns[k]).collect();
            let (_, grad) = global_loss(&weights.w, &batch);
            adam.step(&mut weights.w, &grad)?;
        }
        let (train_loss, _) = global_loss(&weights.w, &columns);
        let val_mrr = val.mrr_of(weights.logits(&val.pos.scores)?, weights.logits(&val.neg.scores)?)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_mrr,
        });
        if stopper.observe(epoch, val_mrr) {
            best.clone_from(&weights.w);
        }
        if stopper.should_stop(epoch) {
            break;
        }
    }
    weights.w = best;
    history.best_epoch = stopper.best_epoch;
    history.best_val_mrr = stopper.best_score;
    Ok((weights, history))
}
