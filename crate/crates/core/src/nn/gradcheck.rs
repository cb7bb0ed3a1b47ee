use rand::seq::index::sample;

use super::seeded_rng;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    /// Coordinates to probe; all coordinates when the vector is smaller.
    pub coords: usize,
    /// Denominator floor for the relative error.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            coords: 50,
            floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub worst_coord: usize,
    pub coords_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

/// Compares `analytic` against central differences of `loss` at `params`.
///
/// Relative error per coordinate is `|a - n| / max(|a|, |n|, floor)`.
pub fn grad_check<F>(mut loss: F, params: &[f64], analytic: &[f64], cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> f64,
{
    if analytic.len() != params.len() {
        return Err(Error::DimMismatch {
            expected: params.len(),
            found: analytic.len(),
        });
    }
    let n = params.len();
    let coords: Vec<usize> = if n <= cfg.coords {
        (0..n).collect()
    } else {
        let mut idx = sample(&mut seeded_rng(cfg.seed), n, cfg.coords).into_vec();
        idx.sort_unstable();
        idx
    };
    let mut probe = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst_coord: 0,
        coords_checked: coords.len(),
    };
    for &k in &coords {
        let orig = probe[k];
        probe[k] = orig + cfg.step;
        let up = loss(&probe);
        probe[k] = orig - cfg.step;
        let down = loss(&probe);
        probe[k] = orig;
        let numeric = (up - down) / (2.0 * cfg.step);
        let abs = (analytic[k] - numeric).abs();
        let rel = abs / analytic[k].abs().max(numeric.abs()).max(cfg.floor);
        if rel > report.max_rel_error || rel.is_nan() {
            report.max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
            report.worst_coord = k;
        }
        report.max_abs_error = report.max_abs_error.max(abs);
    }
    Ok(report)
}
