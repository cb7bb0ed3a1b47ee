//! Mixture-of-experts link prediction.
//!
//! A gating network reads a pair's structural heuristics (and optionally the
//! product of its endpoint features) and produces softmax weights over a set
//! of frozen experts. The mixed logit is squashed with a sigmoid.

pub mod ensembles;
pub mod error;
pub mod eval;
pub mod experts;
pub mod gating;
pub mod graph;
pub mod heuristics;
pub mod nn;
pub mod synthetic;

pub use error::{Error, Result};
