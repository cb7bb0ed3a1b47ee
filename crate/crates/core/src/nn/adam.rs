use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty added to the gradient before the moment updates.
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Bias-corrected Adam over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub cfg: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, n_params: usize) -> Self {
        AdamState {
            cfg,
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        let n = self.first_moment.len();
        if params.len() != n || grads.len() != n {
            return Err(Error::DimMismatch {
                expected: n,
                found: if params.len() != n { params.len() } else { grads.len() },
            });
        }
        self.step_count += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.cfg;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for k in 0..n {
            let g = grads[k] + weight_decay * params[k];
            let m = beta1 * self.first_moment[k] + (1.0 - beta1) * g;
            let v = beta2 * self.second_moment[k] + (1.0 - beta2) * g * g;
            self.first_moment[k] = m;
            self.second_moment[k] = v;
            let m_hat = m / c1;
            let v_hat = v / c2;
            params[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = vec![0.3, -1.2, 4.0];
        let before = p.clone();
        let mut adam = AdamState::new(AdamConfig::with_lr(0.1), 3);
        for _ in 0..10 {
            adam.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(adam.step_count(), 10);
    }

    #[test]
    fn first_step_closed_form() {
        let lr = 0.01;
        let g = [0.5, -2.0, 1e-3];
        let mut p = vec![1.0, 1.0, 1.0];
        let mut adam = AdamState::new(AdamConfig::with_lr(lr), 3);
        adam.step(&mut p, &g).unwrap();
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        for k in 0..3 {
            let expected = 1.0 - lr * g[k] / (g[k].abs() + 1e-8);
            assert!((p[k] - expected).abs() < 1e-15, "{k}: {} vs {expected}", p[k]);
        }
    }

    #[test]
    fn constant_gradient_step_is_bounded_by_lr() {
        let lr = 0.05;
        let mut p = vec![0.0];
        let mut adam = AdamState::new(AdamConfig::with_lr(lr), 1);
        let mut prev = 0.0;
        for _ in 0..200 {
            adam.step(&mut p, &[3.0]).unwrap();
            let step = (p[0] - prev).abs();
            assert!(step <= lr * (1.0 + 1e-9));
            prev = p[0];
        }
        assert!((p[0] + 200.0 * lr).abs() < 1e-6);
    }

    #[test]
    fn zero_lr_leaves_params() {
        let mut p = vec![0.7, -0.2];
        let mut adam = AdamState::new(AdamConfig::with_lr(0.0), 2);
        adam.step(&mut p, &[1.0, -5.0]).unwrap();
        assert_eq!(p, vec![0.7, -0.2]);
    }

    #[test]
    fn length_mismatch() {
        let mut adam = AdamState::new(AdamConfig::default(), 2);
        assert!(adam.step(&mut [0.0; 3], &[0.0; 3]).is_err());
    }
}
