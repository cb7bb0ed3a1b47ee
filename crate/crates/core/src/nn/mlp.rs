use rand::Rng as _;

use super::Rng;
use crate::error::{Error, Result};

/// Layer widths of a ReLU MLP, `[in, hidden.., out]`.
///
/// Parameters live in one flat slice: for each layer, the `out x in`
/// row-major weight matrix followed by the bias vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpShape {
    dims: Vec<usize>,
}

impl MlpShape {
    pub fn new(dims: Vec<usize>) -> Result<MlpShape> {
        if dims.len() < 2 {
            return Err(Error::InvalidConfig(
                "an MLP needs at least an input and an output width".into(),
            ));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "MLP widths must be positive, got {dims:?}"
            )));
        }
        Ok(MlpShape { dims })
    }

    /// `layers` linear maps: `in -> hidden -> ... -> out`.
    pub fn uniform(input: usize, hidden: usize, output: usize, layers: usize) -> Result<MlpShape> {
        if layers == 0 {
            return Err(Error::InvalidConfig("an MLP needs at least one layer".into()));
        }
        let mut dims = vec![input];
        dims.extend(std::iter::repeat_n(hidden, layers - 1));
        dims.push(output);
        MlpShape::new(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// Offset of layer `l`'s weight block; its bias follows immediately.
    fn layer_offset(&self, l: usize) -> usize {
        self.dims[..=l].windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_params(&self, rng: &mut Rng) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.param_count());
        for w in self.dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-a..a)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        params
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimMismatch {
                expected: self.param_count(),
                found: params.len(),
            });
        }
        Ok(())
    }

    /// Forward pass. Passing `Some(rng)` selects training mode: hidden
    /// activations are dropped with probability `dropout` and survivors are
    /// scaled by `1 / (1 - dropout)`. With `None` no dropout is applied.
    pub fn forward(
        &self,
        params: &[f64],
        x: &[f64],
        dropout: f64,
        mut rng: Option<&mut Rng>,
    ) -> Result<(Vec<f64>, Tape)> {
        self.check_params(params)?;
        if x.len() != self.input_dim() {
            return Err(Error::DimMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let n_layers = self.num_layers();
        let mut tape = Tape {
            dims: self.dims.clone(),
            inputs: Vec::with_capacity(n_layers),
            pre: Vec::with_capacity(n_layers),
            masks: Vec::with_capacity(n_layers.saturating_sub(1)),
        };
        let mut act = x.to_vec();
        let mut off = 0;
        for l in 0..n_layers {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let w = &params[off..off + din * dout];
            let b = &params[off + din * dout..off + din * dout + dout];
            off += din * dout + dout;
            let z: Vec<f64> = (0..dout)
                .map(|o| {
                    let row = &w[o * din..(o + 1) * din];
                    row.iter().zip(&act).map(|(a, b)| a * b).sum::<f64>() + b[o]
                })
                .collect();
            tape.inputs.push(std::mem::take(&mut act));
            if l + 1 == n_layers {
                tape.pre.push(z.clone());
                act = z;
            } else {
                let mut h: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
                let mask = match rng.as_deref_mut() {
                    Some(r) if dropout > 0.0 => {
                        let keep = 1.0 / (1.0 - dropout);
                        let m: Vec<f64> = (0..dout)
                            .map(|_| if r.gen::<f64>() < dropout { 0.0 } else { keep })
                            .collect();
                        for (hv, mv) in h.iter_mut().zip(&m) {
                            *hv *= mv;
                        }
                        Some(m)
                    }
                    _ => None,
                };
                tape.pre.push(z);
                tape.masks.push(mask);
                act = h;
            }
        }
        Ok((act, tape))
    }

    /// Reverse pass for a recorded forward. Parameter gradients are
    /// accumulated into `grad_params`; the input gradient is returned.
    pub fn backward(&self, params: &[f64], tape: &Tape, grad_out: &[f64], grad_params: &mut [f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        if tape.dims != self.dims {
            return Err(Error::TapeMismatch);
        }
        if grad_params.len() != params.len() {
            return Err(Error::DimMismatch {
                expected: params.len(),
                found: grad_params.len(),
            });
        }
        if grad_out.len() != self.output_dim() {
            return Err(Error::DimMismatch {
                expected: self.output_dim(),
                found: grad_out.len(),
            });
        }
        let mut g = grad_out.to_vec();
        for l in (0..self.num_layers()).rev() {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let off = self.layer_offset(l);
            let w = &params[off..off + din * dout];
            let input = &tape.inputs[l];
            {
                let (gw, gb) = grad_params[off..off + din * dout + dout].split_at_mut(din * dout);
                for o in 0..dout {
                    let go = g[o];
                    if go == 0.0 {
                        continue;
                    }
                    for (gwi, xi) in gw[o * din..(o + 1) * din].iter_mut().zip(input) {
                        *gwi += go * xi;
                    }
                    gb[o] += go;
                }
            }
            let mut gin = vec![0.0; din];
            for o in 0..dout {
                let go = g[o];
                if go == 0.0 {
                    continue;
                }
                for (gi, wi) in gin.iter_mut().zip(&w[o * din..(o + 1) * din]) {
                    *gi += go * wi;
                }
            }
            if l > 0 {
                let pre = &tape.pre[l - 1];
                let mask = &tape.masks[l - 1];
                for (k, gi) in gin.iter_mut().enumerate() {
                    if pre[k] <= 0.0 {
                        *gi = 0.0;
                    } else if let Some(m) = mask {
                        *gi *= m[k];
                    }
                }
            }
            g = gin;
        }
        Ok(g)
    }
}

/// Intermediates recorded by [`MlpShape::forward`].
#[derive(Debug, Clone)]
pub struct Tape {
    dims: Vec<usize>,
    /// Input to each layer.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    /// Dropout scale factors for each hidden layer, when dropout was drawn.
    masks: Vec<Option<Vec<f64>>>,
}

impl Tape {
    pub fn masks(&self) -> &[Option<Vec<f64>>] {
        &self.masks
    }
}

/// An MLP together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub shape: MlpShape,
    pub params: Vec<f64>,
    pub dropout: f64,
}

impl Mlp {
    pub fn new(shape: MlpShape, params: Vec<f64>, dropout: f64) -> Result<Mlp> {
        shape.check_params(&params)?;
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidConfig(format!(
                "dropout must lie in [0, 1), got {dropout}"
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("non-finite MLP parameter".into()));
        }
        Ok(Mlp { shape, params, dropout })
    }

    pub fn init(shape: MlpShape, dropout: f64, rng: &mut Rng) -> Result<Mlp> {
        let params = shape.init_params(rng);
        Mlp::new(shape, params, dropout)
    }

    pub fn zeros(shape: MlpShape) -> Mlp {
        let params = vec![0.0; shape.param_count()];
        Mlp {
            shape,
            params,
            dropout: 0.0,
        }
    }

    pub fn forward(&self, x: &[f64], rng: Option<&mut Rng>) -> Result<(Vec<f64>, Tape)> {
        self.shape.forward(&self.params, x, self.dropout, rng)
    }

    /// Returns `(parameter gradients, input gradient)`.
    pub fn backward(&self, tape: &Tape, grad_out: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut grads = vec![0.0; self.params.len()];
        let gin = self.shape.backward(&self.params, tape, grad_out, &mut grads)?;
        Ok((grads, gin))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x, None)?.0)
    }
}
