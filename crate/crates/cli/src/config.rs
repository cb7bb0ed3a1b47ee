//! Line-oriented `key = value` run configuration.
//!
//! Settings resolve as flag > config file > built-in default. Every resolved
//! value is recorded so the manifest can snapshot exactly what a run used.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use linkmoe::experts::ExpertDecl;
use linkmoe::heuristics::HeuristicConfig;

/// Keys accepted in a config file. `-` and `_` are interchangeable.
pub const KNOWN_KEYS: &[&str] = &[
    "data",
    "graph",
    "features",
    "split",
    "nodes",
    "include_valid_in_graph",
    "out",
    "seed",
    "threads",
    "experts",
    "katz_beta",
    "katz_max_len",
    "ppr_alpha",
    "ppr_eps",
    "sp_cap",
    "mode",
    "split_ratio",
    "grid",
    "normalize_scores",
    "lr",
    "dropout",
    "weight_decay",
    "layers",
    "hidden",
    "max_epochs",
    "patience",
    "batch_size",
    "mlp_name",
    "mlp_hidden",
    "mlp_layers",
    "mlp_lr",
    "mlp_dropout",
    "mlp_weight_decay",
    "mlp_epochs",
    "mlp_batch_size",
    "ensemble_lr",
    "ensemble_weight_decay",
    "ensemble_max_epochs",
    "ensemble_patience",
    "ensemble_batch_size",
    "kind",
    "sources",
    "set",
    "ks",
    "k",
    "group_by",
    "bins",
    "checkpoint",
    "pairs",
    "output",
];

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    /// Directory that relative paths in the file are resolved against.
    base: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`", idx + 1);
            };
            let key = normalize_key(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("config line {}: unknown key {key:?}", idx + 1);
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                bail!("config line {}: duplicate key {key:?}", idx + 1);
            }
        }
        Ok(ConfigFile { values, base: None })
    }

    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = ConfigFile::parse(&text).with_context(|| path.display().to_string())?;
        cfg.base = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Applies precedence and records every resolved setting.
#[derive(Debug, Default)]
pub struct Resolver {
    file: ConfigFile,
    snapshot: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(file: ConfigFile) -> Resolver {
        Resolver {
            file,
            snapshot: BTreeMap::new(),
        }
    }

    pub fn from_path(path: Option<&Path>) -> Result<Resolver> {
        Ok(Resolver::new(match path {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        }))
    }

    fn file_value<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.file.get(key) {
            None => Ok(None),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key}: bad value {text:?}: {e}")),
        }
    }

    /// Flag, then config file; `None` when neither is set.
    pub fn value<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &v {
            self.snapshot.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    pub fn or<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = self.value(key, flag)?.unwrap_or(default);
        self.snapshot.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Enumerated setting spelled as on the command line.
    pub fn choice<T: clap::ValueEnum + Clone>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(text) => T::from_str(text, true).map_err(|e| anyhow::anyhow!("config key {key}: {e}"))?,
                None => default,
            },
        };
        let name = v
            .to_possible_value()
            .map(|p| p.get_name().to_string())
            .unwrap_or_default();
        self.snapshot.insert(key.to_string(), name);
        Ok(v)
    }

    /// Boolean switch: a set flag wins, otherwise the file value, otherwise off.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool> {
        let v = if flag {
            true
        } else {
            self.file_value(key)?.unwrap_or(false)
        };
        self.snapshot.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// Path setting; relative paths from the config file resolve against its directory.
    pub fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        let p = flag.or_else(|| {
            self.file.get(key).map(|text| {
                let p = PathBuf::from(text);
                match &self.file.base {
                    Some(base) if p.is_relative() => base.join(p),
                    _ => p,
                }
            })
        });
        if let Some(p) = &p {
            self.snapshot.insert(key.to_string(), p.display().to_string());
        }
        p
    }

    /// Records a derived setting that has no flag of its own.
    pub fn record(&mut self, key: &str, value: impl Display) {
        self.snapshot.insert(key.to_string(), value.to_string());
    }

    pub fn snapshot(&self) -> &BTreeMap<String, String> {
        &self.snapshot
    }

    /// Comma list from a repeatable flag or a config value.
    pub fn list(&mut self, key: &str, flag: &[String]) -> Vec<String> {
        let items: Vec<String> = if flag.is_empty() {
            self.file.get(key).map(split_list).unwrap_or_default()
        } else {
            flag.iter().flat_map(|s| split_list(s)).collect()
        };
        if !items.is_empty() {
            self.snapshot.insert(key.to_string(), items.join(","));
        }
        items
    }

    pub fn heuristics(&mut self, args: &crate::cli::HeuristicArgs) -> Result<HeuristicConfig> {
        let d = HeuristicConfig::default();
        let cfg = HeuristicConfig {
            katz_beta: self.or("katz_beta", args.katz_beta, d.katz_beta)?,
            katz_max_len: self.or("katz_max_len", args.katz_max_len, d.katz_max_len)?,
            ppr_alpha: self.or("ppr_alpha", args.ppr_alpha, d.ppr_alpha)?,
            ppr_eps: self.or("ppr_eps", args.ppr_eps, d.ppr_eps)?,
            sp_cap: self.or("sp_cap", args.sp_cap, d.sp_cap)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn experts(&mut self, flag: &[String]) -> Result<Vec<ExpertDecl>> {
        let items = self.list("experts", flag);
        let decls = items
            .iter()
            .map(|s| s.parse::<ExpertDecl>())
            .collect::<linkmoe::Result<Vec<_>>>()?;
        // score files and checkpoints named in a config file follow its directory
        Ok(decls
            .into_iter()
            .map(|d| match d {
                ExpertDecl::External { name, path } if flag.is_empty() => ExpertDecl::External {
                    name,
                    path: self.rebase(path),
                },
                ExpertDecl::FeatureMlp { name, path } if flag.is_empty() => ExpertDecl::FeatureMlp {
                    name,
                    path: self.rebase(path),
                },
                d => d,
            })
            .collect())
    }

    fn rebase(&self, p: PathBuf) -> PathBuf {
        match &self.file.base {
            Some(base) if p.is_relative() => base.join(p),
            _ => p,
        }
    }
}

pub fn split_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses `"1,3,10"` into sorted, deduplicated cutoffs.
pub fn parse_ks(text: &str) -> Result<Vec<usize>> {
    let mut ks = split_list(text)
        .iter()
        .map(|s| s.parse::<usize>().with_context(|| format!("bad K value {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    if ks.is_empty() {
        bail!("empty K list");
    }
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}
