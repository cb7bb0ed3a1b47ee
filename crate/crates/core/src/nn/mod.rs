//! Dense MLP machinery with a fixed reverse-mode tape, Adam, and a
//! finite-difference gradient checker.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod mlp;
mod rng;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use mlp::{Mlp, MlpShape, Tape};
pub use rng::{derive_seed, seeded_rng, Rng};

/// Logits are clamped to this magnitude before any exponentiation.
pub const LOGIT_CLAMP: f64 = 30.0;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

/// Max-subtracted softmax.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Backpropagates `grad_p` (dL/dp) through `p = softmax(z)`, returning dL/dz.
pub fn softmax_backward(p: &[f64], grad_p: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(grad_p).map(|(a, b)| a * b).sum();
    p.iter().zip(grad_p).map(|(pi, gi)| pi * (gi - dot)).collect()
}

/// Binary cross-entropy on a logit. Returns `(loss, dloss/dlogit)`.
///
/// The logit is clamped to `±LOGIT_CLAMP`; the gradient is `sigmoid(z) - y`.
pub fn bce_with_logits(logit: f64, label: f64) -> (f64, f64) {
    let z = logit.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    // softplus(z) - y*z == -[y ln s + (1-y) ln(1-s)]
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    (softplus - label * z, sigmoid(z) - label)
}
