//! Command-line frontend for the `linkmoe` toolkit.
//!
//! Each subcommand reads a dataset directory (or explicit graph, feature and
//! split paths), writes its results into `--out`, and records a
//! `manifest.json` with the resolved configuration, stage timings and a
//! SHA-256 digest of every file it wrote.

pub mod cli;
pub mod commands;
pub mod config;
pub mod data;
pub mod manifest;
pub mod sources;

use anyhow::Result;

use cli::{Cli, Command, CommonArgs};
use config::Resolver;
use manifest::RunManifest;
use sources::UnknownSource;

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Heuristics(a) => &a.common,
            Command::ExportScores(a) => &a.common,
            Command::TrainExpertMlp(a) => &a.common,
            Command::TrainGate(a) => &a.common,
            Command::Ensemble(a) => &a.common,
            Command::Predict(a) => &a.common,
            Command::Evaluate(a) => &a.common,
            Command::Analyze(a) => &a.common,
        }
    }
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else {
        return Ok(());
    };
    if n == 0 {
        anyhow::bail!(linkmoe::Error::InvalidConfig("threads must be at least 1".into()));
    }
    // a pool that already exists (repeated in-process runs) is kept as is
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<RunManifest> {
    let mut r = Resolver::from_path(cli.command.common().config.as_deref())?;
    configure_threads(r.value("threads", cli.threads)?)?;
    match &cli.command {
        Command::Heuristics(a) => commands::cmd_heuristics(a, r),
        Command::ExportScores(a) => commands::cmd_export_scores(a, r),
        Command::TrainExpertMlp(a) => commands::cmd_train_expert_mlp(a, r),
        Command::TrainGate(a) => commands::cmd_train_gate(a, r),
        Command::Ensemble(a) => commands::cmd_ensemble(a, r),
        Command::Predict(a) => commands::cmd_predict(a, r),
        Command::Evaluate(a) => commands::cmd_evaluate(a, r),
        Command::Analyze(a) => commands::cmd_analyze(a, r),
    }
}

/// Upper-case error kind for the first recognized error in the chain.
pub fn error_code(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<linkmoe::Error>() {
            return e.code();
        }
        if cause.downcast_ref::<UnknownSource>().is_some() {
            return "UNKNOWN_SOURCE";
        }
    }
    "ERROR"
}
