use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "linkmoe", version, about = "Mixture-of-experts link prediction toolkit")]
pub struct Cli {
    /// Worker threads for parallel scoring (default: all cores).
    #[arg(long, global = true, env = "LINKMOE_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural heuristic table for every split pair.
    Heuristics(HeuristicsCmd),
    /// Score files for built-in experts over the evaluation pairs.
    ExportScores(ExportScoresCmd),
    /// Train the feature-MLP expert on training edges.
    TrainExpertMlp(TrainExpertMlpCmd),
    /// Train the gating network (optionally over a hyperparameter grid).
    TrainGate(TrainGateCmd),
    /// Mean or learned global-weight ensemble of experts.
    Ensemble(EnsembleCmd),
    /// Score pairs with a trained gate checkpoint.
    Predict(PredictCmd),
    /// Ranking metrics for one or more score sources.
    Evaluate(EvaluateCmd),
    /// Overlap, group, combination-grid and gate-weight analyses.
    Analyze(AnalyzeCmd),
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// `key = value` config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory holding graph.txt, optional features.txt and the split files.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Graph header file (`n=<count>`).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Node feature file, one row per node.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Directory with train/valid/test and negative files.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Node count, instead of a graph header.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Add validation edges to the graph heuristics are computed on.
    #[arg(long)]
    pub include_valid_in_graph: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub heuristics: HeuristicArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct HeuristicArgs {
    #[arg(long)]
    pub katz_beta: Option<f64>,
    #[arg(long)]
    pub katz_max_len: Option<usize>,
    #[arg(long)]
    pub ppr_alpha: Option<f64>,
    #[arg(long)]
    pub ppr_eps: Option<f64>,
    #[arg(long)]
    pub sp_cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct HeuristicsCmd {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ExportScoresCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma list of expert declarations (cn, aa, ..., mlp:<ckpt>).
    #[arg(long)]
    pub experts: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainExpertMlpCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Expert name; the checkpoint is written as `<name>.ckpt`.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainGateCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub experts: Vec<String>,
    /// all | only-struct | only-feat | only-local | only-global
    #[arg(long)]
    pub mode: Option<String>,
    /// Fraction of validation positives used to fit the gate.
    #[arg(long)]
    pub split_ratio: Option<f64>,
    /// Grid file or preset name (planetoid, pubmed, ogb).
    #[arg(long)]
    pub grid: Option<String>,
    /// Standardize each expert's scores before mixing.
    #[arg(long)]
    pub normalize_scores: bool,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnsembleKind {
    Mean,
    Global,
}

#[derive(Debug, Args)]
pub struct EnsembleCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub experts: Vec<String>,
    #[arg(long, value_enum)]
    pub kind: Option<EnsembleKind>,
    #[arg(long)]
    pub split_ratio: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputKind {
    Prob,
    Logit,
}

#[derive(Debug, Args)]
pub struct PredictCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub experts: Vec<String>,
    /// Gate checkpoint written by train-gate.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Pairs to score, one `u v` per line (default: test positives and negatives).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub output: Option<OutputKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalSplit {
    Valid,
    Test,
}

#[derive(Debug, Args)]
pub struct EvaluateCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub experts: Vec<String>,
    /// Score sources: an expert name, `mean`, `global:<weights>`,
    /// `moe:<checkpoint>` or `file:<scores>`.
    #[arg(long = "source")]
    pub sources: Vec<String>,
    /// Hits@K cutoffs, e.g. "1,3,10,20,50,100".
    #[arg(long)]
    pub ks: Option<String>,
    #[arg(long, value_enum)]
    pub set: Option<EvalSplit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalysisKind {
    Overlap,
    Groups,
    Grid,
    GateWeights,
}

#[derive(Debug, Args)]
pub struct AnalyzeCmd {
    #[arg(value_enum)]
    pub kind: AnalysisKind,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub experts: Vec<String>,
    #[arg(long = "source")]
    pub sources: Vec<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// cn | sp | fcs
    #[arg(long)]
    pub group_by: Option<String>,
    /// Ascending bin thresholds (default: fixed edges for cn/sp, quintiles for fcs).
    #[arg(long)]
    pub bins: Option<String>,
    /// Gate checkpoint for gate-weights.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub set: Option<EvalSplit>,
}
