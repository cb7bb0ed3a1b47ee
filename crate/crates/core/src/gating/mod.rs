//! Mixture-of-experts gating.
//!
//! A gate maps a pair's heuristic profile to a softmax weight per expert.
//! The prediction for a pair is `sigmoid(sum_o w_o * score_o)` where the
//! expert scores are frozen. Gates are trained on a re-split of the
//! validation set, since expert scores on their own training edges are
//! overconfident.

mod grid;
mod model;
mod network;
mod split;
mod train;

pub use grid::{grid_search, GridOutcome, HyperGrid};
pub use model::{build_inputs, predict_pairs, LinkMoe, GATE_CHECKPOINT_KIND};
pub use network::{
    moe_logit, moe_predict, GateArch, GateInput, GateMode, GateNetwork, GateTape, Standardizer, STD_FLOOR,
};
pub use split::{split_validation, EvalSet, DEFAULT_SPLIT_RATIO};
pub(crate) use train::EarlyStopper;
pub use train::{
    fit_link_moe, gate_loss, gate_val_mrr, mode_uses_features, prepare_gate_data, train_gate, EpochRecord, GateBatch,
    GateData, GateTrainConfig, PreparedGateData, Sample, TrainHistory,
};
