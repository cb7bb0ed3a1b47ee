use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::heuristics::{StructuralVector, NUM_STRUCTURAL};
use crate::nn::{softmax, softmax_backward, MlpShape, Rng, Tape};

/// Which heuristic families the gate may look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateMode {
    /// Structural branch plus the feature branch when features exist.
    All,
    OnlyStruct,
    OnlyFeat,
    /// Degree features with CN, AA, RA.
    OnlyLocalStruct,
    /// Degree features with shortest path, Katz, PPR.
    OnlyGlobalStruct,
}

const ALL_COLUMNS: [usize; 8] = [0, 1, 2, 3, 4, 5, 6, 7];
const LOCAL_COLUMNS: [usize; 5] = [0, 1, 2, 3, 4];
const GLOBAL_COLUMNS: [usize; 5] = [0, 1, 5, 6, 7];

impl GateMode {
    pub const ALL_MODES: [GateMode; 5] = [
        GateMode::All,
        GateMode::OnlyStruct,
        GateMode::OnlyFeat,
        GateMode::OnlyLocalStruct,
        GateMode::OnlyGlobalStruct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateMode::All => "all",
            GateMode::OnlyStruct => "only-struct",
            GateMode::OnlyFeat => "only-feat",
            GateMode::OnlyLocalStruct => "only-local",
            GateMode::OnlyGlobalStruct => "only-global",
        }
    }

    /// Indices into [`StructuralVector`] fed to the structural branch.
    pub fn structural_columns(self) -> &'static [usize] {
        match self {
            GateMode::All | GateMode::OnlyStruct => &ALL_COLUMNS,
            GateMode::OnlyLocalStruct => &LOCAL_COLUMNS,
            GateMode::OnlyGlobalStruct => &GLOBAL_COLUMNS,
            GateMode::OnlyFeat => &[],
        }
    }

    fn code(self) -> u32 {
        match self {
            GateMode::All => 0,
            GateMode::OnlyStruct => 1,
            GateMode::OnlyFeat => 2,
            GateMode::OnlyLocalStruct => 3,
            GateMode::OnlyGlobalStruct => 4,
        }
    }

    pub(crate) fn from_code(code: u32) -> Result<GateMode> {
        GateMode::ALL_MODES
            .into_iter()
            .find(|m| m.code() == code)
            .ok_or_else(|| Error::Checkpoint(format!("unknown gate mode code {code}")))
    }

    pub(crate) fn to_code(self) -> u32 {
        self.code()
    }
}

impl fmt::Display for GateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<GateMode> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let mode = match norm.as_str() {
            "all" => GateMode::All,
            "only-struct" | "onlystruct" => GateMode::OnlyStruct,
            "only-feat" | "onlyfeat" => GateMode::OnlyFeat,
            "only-local" | "only-local-struct" | "onlylocalstruct" => GateMode::OnlyLocalStruct,
            "only-global" | "only-global-struct" | "onlyglobalstruct" => GateMode::OnlyGlobalStruct,
            _ => return Err(Error::InvalidConfig(format!("unknown gate mode {s:?}"))),
        };
        Ok(mode)
    }
}

/// Per-column z-scoring of structural heuristics.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: [f64; NUM_STRUCTURAL],
    pub std: [f64; NUM_STRUCTURAL],
}

pub const STD_FLOOR: f64 = 1e-8;

impl Standardizer {
    pub fn fit(rows: &[StructuralVector]) -> Standardizer {
        let n = rows.len().max(1) as f64;
        let mut mean = [0.0; NUM_STRUCTURAL];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.values()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = [0.0; NUM_STRUCTURAL];
        for r in rows {
            for k in 0..NUM_STRUCTURAL {
                std[k] += (r.0[k] - mean[k]).powi(2);
            }
        }
        std.iter_mut().for_each(|s| *s = (*s / n).sqrt().max(STD_FLOOR));
        Standardizer { mean, std }
    }

    pub fn identity() -> Standardizer {
        Standardizer {
            mean: [0.0; NUM_STRUCTURAL],
            std: [1.0; NUM_STRUCTURAL],
        }
    }

    pub fn apply(&self, v: &StructuralVector) -> Vec<f64> {
        (0..NUM_STRUCTURAL)
            .map(|k| (v.0[k] - self.mean[k]) / self.std[k])
            .collect()
    }
}

/// What the gate sees for one pair: standardized structural heuristics and,
/// when the feature branch is active, the endpoint feature product.
#[derive(Debug, Clone, PartialEq)]
pub struct GateInput {
    pub structural: Vec<f64>,
    pub feature: Option<Vec<f64>>,
}

/// Width and depth of the three gate MLPs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateArch {
    pub hidden: usize,
    /// Linear layers in each branch and in the fusion head.
    pub layers: usize,
    pub dropout: f64,
}

impl Default for GateArch {
    fn default() -> Self {
        GateArch {
            hidden: 32,
            layers: 2,
            dropout: 0.0,
        }
    }
}

/// Two-branch gate: `softmax(head(feat_branch(x) || struct_branch(s)))`.
///
/// All parameters sit in one flat vector laid out as
/// `[structural branch | feature branch | fusion head]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateNetwork {
    pub mode: GateMode,
    pub m: usize,
    pub struct_branch: Option<MlpShape>,
    pub feat_branch: Option<MlpShape>,
    pub head: MlpShape,
    pub params: Vec<f64>,
    pub dropout: f64,
}

#[derive(Debug, Clone)]
pub struct GateTape {
    struct_tape: Option<Tape>,
    feat_tape: Option<Tape>,
    head_tape: Tape,
    pub weights: Vec<f64>,
}

impl GateNetwork {
    fn shapes(
        mode: GateMode,
        m: usize,
        feature_dim: Option<usize>,
        arch: &GateArch,
    ) -> Result<(Option<MlpShape>, Option<MlpShape>, MlpShape)> {
        if m == 0 {
            return Err(Error::EmptyRegistry);
        }
        if arch.hidden == 0 || arch.layers == 0 {
            return Err(Error::InvalidConfig(
                "gate hidden width and depth must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&arch.dropout) {
            return Err(Error::InvalidConfig(format!(
                "dropout must lie in [0, 1), got {}",
                arch.dropout
            )));
        }
        let feature_dim = feature_dim.filter(|&d| d > 0);
        let use_feat = match mode {
            GateMode::OnlyFeat => {
                if feature_dim.is_none() {
                    return Err(Error::ModeInputMismatch {
                        mode: mode.to_string(),
                        reason: "feature branch requested but no node features supplied".into(),
                    });
                }
                true
            }
            GateMode::All => feature_dim.is_some(),
            _ => false,
        };
        let cols = mode.structural_columns().len();
        let struct_branch = if cols > 0 {
            Some(MlpShape::uniform(cols, arch.hidden, arch.hidden, arch.layers)?)
        } else {
            None
        };
        let feat_branch = if use_feat {
            Some(MlpShape::uniform(
                feature_dim.unwrap(),
                arch.hidden,
                arch.hidden,
                arch.layers,
            )?)
        } else {
            None
        };
        let fused = arch.hidden * (struct_branch.is_some() as usize + feat_branch.is_some() as usize);
        let head = MlpShape::uniform(fused, arch.hidden, m, arch.layers)?;
        Ok((struct_branch, feat_branch, head))
    }

    /// Randomly initialized gate. `feature_dim` is `None` when the run has
    /// no node features; mode `All` then drops the feature branch.
    pub fn new(
        mode: GateMode,
        m: usize,
        feature_dim: Option<usize>,
        arch: &GateArch,
        rng: &mut Rng,
    ) -> Result<GateNetwork> {
        let (sb, fb, head) = Self::shapes(mode, m, feature_dim, arch)?;
        let mut params = Vec::new();
        for shape in sb.iter().chain(fb.iter()).chain(std::iter::once(&head)) {
            params.extend(shape.init_params(rng));
        }
        Ok(GateNetwork {
            mode,
            m,
            struct_branch: sb,
            feat_branch: fb,
            head,
            params,
            dropout: arch.dropout,
        })
    }

    /// Gate with every parameter zero; it assigns uniform weights.
    pub fn zeros(mode: GateMode, m: usize, feature_dim: Option<usize>, arch: &GateArch) -> Result<GateNetwork> {
        let (sb, fb, head) = Self::shapes(mode, m, feature_dim, arch)?;
        let n = sb.iter().chain(fb.iter()).map(MlpShape::param_count).sum::<usize>() + head.param_count();
        Ok(GateNetwork {
            mode,
            m,
            struct_branch: sb,
            feat_branch: fb,
            head,
            params: vec![0.0; n],
            dropout: arch.dropout,
        })
    }

    pub fn uses_features(&self) -> bool {
        self.feat_branch.is_some()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.feat_branch.as_ref().map(MlpShape::input_dim)
    }

    /// Parameter ranges of the structural branch, feature branch, and head.
    pub fn param_ranges(&self) -> [std::ops::Range<usize>; 3] {
        let s = self.struct_branch.as_ref().map_or(0, MlpShape::param_count);
        let f = self.feat_branch.as_ref().map_or(0, MlpShape::param_count);
        let h = self.head.param_count();
        [0..s, s..s + f, s + f..s + f + h]
    }

    fn check_input(&self, input: &GateInput) -> Result<()> {
        let mismatch = |reason: String| Error::ModeInputMismatch {
            mode: self.mode.to_string(),
            reason,
        };
        if self.struct_branch.is_some() && input.structural.len() != NUM_STRUCTURAL {
            return Err(mismatch(format!(
                "expected {NUM_STRUCTURAL} structural values, got {}",
                input.structural.len()
            )));
        }
        match (&self.feat_branch, &input.feature) {
            (Some(shape), Some(x)) if x.len() != shape.input_dim() => Err(mismatch(format!(
                "expected pair feature of width {}, got {}",
                shape.input_dim(),
                x.len()
            ))),
            (Some(_), None) => Err(mismatch("gate expects a pair feature".into())),
            (None, Some(_)) => Err(mismatch("gate has no feature branch".into())),
            _ => Ok(()),
        }
    }

    /// Expert weights for one pair. `Some(rng)` selects training mode.
    pub fn forward(&self, input: &GateInput, mut rng: Option<&mut Rng>) -> Result<(Vec<f64>, GateTape)> {
        self.check_input(input)?;
        let [rs, rf, rh] = self.param_ranges();
        let mut fused = Vec::with_capacity(self.head.input_dim());
        let feat_tape = match (&self.feat_branch, &input.feature) {
            (Some(shape), Some(x)) => {
                let (h, tape) = shape.forward(&self.params[rf], x, self.dropout, rng.as_deref_mut())?;
                fused.extend(h);
                Some(tape)
            }
            _ => None,
        };
        let struct_tape = match &self.struct_branch {
            Some(shape) => {
                let s: Vec<f64> = self
                    .mode
                    .structural_columns()
                    .iter()
                    .map(|&c| input.structural[c])
                    .collect();
                let (h, tape) = shape.forward(&self.params[rs], &s, self.dropout, rng.as_deref_mut())?;
                fused.extend(h);
                Some(tape)
            }
            None => None,
        };
        let (logits, head_tape) = self.head.forward(&self.params[rh], &fused, self.dropout, rng)?;
        let weights = softmax(&logits);
        Ok((
            weights.clone(),
            GateTape {
                struct_tape,
                feat_tape,
                head_tape,
                weights,
            },
        ))
    }

    pub fn weights(&self, input: &GateInput) -> Result<Vec<f64>> {
        Ok(self.forward(input, None)?.0)
    }

    /// Accumulates dL/dparams into `grads` given dL/dweights.
    pub fn backward(&self, tape: &GateTape, grad_weights: &[f64], grads: &mut [f64]) -> Result<()> {
        if grads.len() != self.params.len() {
            return Err(Error::DimMismatch {
                expected: self.params.len(),
                found: grads.len(),
            });
        }
        if grad_weights.len() != self.m || tape.weights.len() != self.m {
            return Err(Error::TapeMismatch);
        }
        let [rs, rf, rh] = self.param_ranges();
        let dlogits = softmax_backward(&tape.weights, grad_weights);
        let dfused = self
            .head
            .backward(&self.params[rh.clone()], &tape.head_tape, &dlogits, &mut grads[rh])?;
        let mut offset = 0;
        if let (Some(shape), Some(t)) = (&self.feat_branch, &tape.feat_tape) {
            let w = shape.output_dim();
            shape.backward(&self.params[rf.clone()], t, &dfused[offset..offset + w], &mut grads[rf])?;
            offset += w;
        }
        if let (Some(shape), Some(t)) = (&self.struct_branch, &tape.struct_tape) {
            let w = shape.output_dim();
            shape.backward(&self.params[rs.clone()], t, &dfused[offset..offset + w], &mut grads[rs])?;
        }
        Ok(())
    }
}

/// Mixed logit `sum_o weight_o * score_o`.
pub fn moe_logit(weights: &[f64], scores: &[f64]) -> f64 {
    weights.iter().zip(scores).map(|(w, s)| w * s).sum()
}

/// `sigmoid(sum_o G(h)_o * E_o)` for one pair.
pub fn moe_predict(gate: &GateNetwork, scores: &[f64], input: &GateInput) -> Result<f64> {
    if scores.len() != gate.m {
        return Err(Error::DimMismatch {
            expected: gate.m,
            found: scores.len(),
        });
    }
    let w = gate.weights(input)?;
    Ok(crate::nn::sigmoid(moe_logit(&w, scores)))
}
