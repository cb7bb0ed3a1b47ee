//! Hyperparameter grids for gate model selection.
//!
//! Grid files hold `key = v1, v2, ...` lines for any of `lr`, `dropout`,
//! `weight_decay`, `layers`, `hidden`; keys left out keep the base value.

use super::train::{fit_link_moe, GateTrainConfig, PreparedGateData, TrainHistory};
use super::LinkMoe;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub lr: Vec<f64>,
    pub dropout: Vec<f64>,
    pub weight_decay: Vec<f64>,
    pub layers: Vec<usize>,
    pub hidden: Vec<usize>,
}

impl HyperGrid {
    /// Search ranges for the small Planetoid graphs (Cora, Citeseer).
    pub fn planetoid_small() -> HyperGrid {
        HyperGrid {
            lr: vec![1e-4, 5e-4],
            dropout: vec![0.0, 0.3, 0.5],
            weight_decay: vec![1e-4, 1e-7, 0.0],
            layers: vec![1, 2, 3],
            hidden: vec![8, 16, 32, 64],
        }
    }

    pub fn pubmed() -> HyperGrid {
        HyperGrid {
            lr: vec![0.01, 0.001],
            ..HyperGrid::planetoid_small()
        }
    }

    pub fn ogb() -> HyperGrid {
        HyperGrid {
            lr: vec![0.01, 0.001],
            dropout: vec![0.0, 0.3, 0.5],
            weight_decay: vec![0.0],
            layers: vec![2, 3, 4],
            hidden: vec![32, 64, 128],
        }
    }

    pub fn preset(name: &str) -> Result<HyperGrid> {
        match name.to_ascii_lowercase().as_str() {
            "cora" | "citeseer" | "planetoid" | "planetoid-small" => Ok(HyperGrid::planetoid_small()),
            "pubmed" => Ok(HyperGrid::pubmed()),
            "ogb" | "collab" | "ppa" | "citation2" => Ok(HyperGrid::ogb()),
            _ => Err(Error::InvalidConfig(format!("unknown grid preset {name:?}"))),
        }
    }

    /// Single-point grid holding the base configuration.
    pub fn single(base: &GateTrainConfig) -> HyperGrid {
        HyperGrid {
            lr: vec![base.lr],
            dropout: vec![base.dropout],
            weight_decay: vec![base.weight_decay],
            layers: vec![base.layers],
            hidden: vec![base.hidden],
        }
    }

    pub fn parse(text: &str, base: &GateTrainConfig) -> Result<HyperGrid> {
        let mut grid = HyperGrid::single(base);
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: &str| Error::MalformedLine {
                line: k + 1,
                reason: reason.to_string(),
            };
            let (key, values) = line.split_once('=').ok_or_else(|| malformed("expected key = values"))?;
            let items: Vec<&str> = values.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            if items.is_empty() {
                return Err(malformed("no values"));
            }
            let reals = || -> Result<Vec<f64>> {
                items
                    .iter()
                    .map(|s| s.parse::<f64>().map_err(|_| malformed(&format!("bad number {s:?}"))))
                    .collect()
            };
            let counts = || -> Result<Vec<usize>> {
                items
                    .iter()
                    .map(|s| s.parse::<usize>().map_err(|_| malformed(&format!("bad integer {s:?}"))))
                    .collect()
            };
            match key.trim().replace('-', "_").as_str() {
                "lr" => grid.lr = reals()?,
                "dropout" => grid.dropout = reals()?,
                "weight_decay" | "wd" => grid.weight_decay = reals()?,
                "layers" => grid.layers = counts()?,
                "hidden" | "hidden_dim" => grid.hidden = counts()?,
                other => return Err(malformed(&format!("unknown grid key {other:?}"))),
            }
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.lr.len() * self.dropout.len() * self.weight_decay.len() * self.layers.len() * self.hidden.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every grid point applied to `base`, in lexicographic key order.
    pub fn configs(&self, base: &GateTrainConfig) -> Vec<GateTrainConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &lr in &self.lr {
            for &dropout in &self.dropout {
                for &weight_decay in &self.weight_decay {
                    for &layers in &self.layers {
                        for &hidden in &self.hidden {
                            out.push(GateTrainConfig {
                                lr,
                                dropout,
                                weight_decay,
                                layers,
                                hidden,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub runs: Vec<(GateTrainConfig, TrainHistory)>,
    /// Index into `runs` of the best validation MRR, earliest on ties.
    pub best: usize,
    pub model: LinkMoe,
}

/// Trains one gate per grid point and keeps the best on gate-val MRR.
pub fn grid_search(prep: &PreparedGateData, grid: &HyperGrid, base: &GateTrainConfig) -> Result<GridOutcome> {
    let configs = grid.configs(base);
    if configs.is_empty() {
        return Err(Error::InvalidConfig("hyperparameter grid is empty".into()));
    }
    let mut runs = Vec::with_capacity(configs.len());
    let mut best: Option<(usize, f64, LinkMoe)> = None;
    for (k, cfg) in configs.into_iter().enumerate() {
        let (model, history) = fit_link_moe(prep, &cfg)?;
        if best.as_ref().is_none_or(|b| history.best_val_mrr > b.1) {
            best = Some((k, history.best_val_mrr, model));
        }
        runs.push((cfg, history));
    }
    let (best, _, model) = best.unwrap();
    Ok(GridOutcome { runs, best, model })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_sizes() {
        assert_eq!(HyperGrid::planetoid_small().len(), 2 * 3 * 3 * 3 * 4);
        assert_eq!(HyperGrid::pubmed().lr, vec![0.01, 0.001]);
        assert_eq!(HyperGrid::ogb().len(), 2 * 3 * 3 * 3);
        assert!(HyperGrid::preset("nope").is_err());
    }

    #[test]
    fn parse_overrides_listed_keys() {
        let base = GateTrainConfig::default();
        let grid = HyperGrid::parse("# small\nlr = 0.1, 0.01\nhidden=8\n", &base).unwrap();
        assert_eq!(grid.lr, vec![0.1, 0.01]);
        assert_eq!(grid.hidden, vec![8]);
        assert_eq!(grid.layers, vec![base.layers]);
        let cfgs = grid.configs(&base);
        assert_eq!(cfgs.len(), 2);
        assert_eq!(cfgs[1].lr, 0.01);
        assert_eq!(cfgs[1].seed, base.seed);
        assert!(HyperGrid::parse("depth = 3", &base).is_err());
        assert!(HyperGrid::parse("lr = fast", &base).is_err());
    }
}
