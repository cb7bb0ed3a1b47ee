//! One function per subcommand. Each writes into its output directory and
//! finishes with a manifest; any error drops the [`Output`] and with it
//! every file written so far.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use linkmoe::ensembles::{mean_ensemble, train_global_ensemble, EnsembleTrainConfig};
use linkmoe::eval::{
    avg_gate_weights_per_group, combination_grid, group_breakdown, overlap_matrix, tables, GroupKey, GroupSpec,
    MethodScores, DEFAULT_KS,
};
use linkmoe::experts::{score_pairs, train_feature_mlp_expert, write_scores, MlpTrainConfig};
use linkmoe::gating::{
    fit_link_moe, grid_search, mode_uses_features, prepare_gate_data, split_validation, GateMode, GateTrainConfig,
    HyperGrid, LinkMoe, PreparedGateData, TrainHistory, DEFAULT_SPLIT_RATIO,
};
use linkmoe::graph::{load_edge_list, Pair};
use linkmoe::heuristics::{batch_structural, STRUCTURAL_NAMES};
use linkmoe::nn::{derive_seed, seeded_rng, sigmoid};

use crate::cli::{
    AnalysisKind, AnalyzeCmd, EnsembleCmd, EnsembleKind, EvalSplit, EvaluateCmd, ExportScoresCmd, HeuristicsCmd,
    OutputKind, PredictCmd, TrainExpertMlpCmd, TrainGateCmd,
};
use crate::config::{parse_ks, split_list, Resolver};
use crate::data::{Dataset, RunConfig};
use crate::manifest::{Output, RunManifest};
use crate::sources::{Scorer, Source};

/// Default K for the overlap, group and grid analyses.
pub const DEFAULT_ANALYSIS_K: usize = 3;

fn load(out: &mut Output, cfg: &RunConfig) -> Result<Dataset> {
    out.stage("load", || cfg.load())
}

pub fn cmd_heuristics(args: &HeuristicsCmd, mut r: Resolver) -> Result<RunManifest> {
    let cfg = RunConfig::resolve(&mut r, &args.common, None)?;
    let mut out = Output::create(&cfg.out)?;
    let data = load(&mut out, &cfg)?;
    let s = &data.split;
    let sets: [(&str, Vec<Pair>); 5] = [
        ("train", s.train_pos.clone()),
        ("valid", s.valid_pos.clone()),
        ("test", s.test_pos.clone()),
        ("valid_neg", s.valid_neg.all_pairs()),
        ("test_neg", s.test_neg.all_pairs()),
    ];
    let rows = out.stage("heuristics", || {
        sets.iter()
            .map(|(_, pairs)| Ok(batch_structural(&data.graph, &cfg.heuristics, pairs)?))
            .collect::<Result<Vec<_>>>()
    })?;
    out.write_with("heuristics.csv", |w| {
        writeln!(w, "set,u,v,{}", STRUCTURAL_NAMES.join(","))?;
        for ((name, pairs), vectors) in sets.iter().zip(&rows) {
            for (&(u, v), s) in pairs.iter().zip(vectors) {
                let cells: Vec<String> = s.values().iter().map(f64::to_string).collect();
                writeln!(w, "{name},{u},{v},{}", cells.join(","))?;
            }
        }
        Ok(())
    })?;
    out.write_text("heuristics.cfg", &cfg.heuristics.to_kv())?;
    out.finish("heuristics", Some(cfg.seed), r.snapshot())
}

pub fn cmd_export_scores(args: &ExportScoresCmd, mut r: Resolver) -> Result<RunManifest> {
    let cfg = RunConfig::resolve(&mut r, &args.common, Some(&args.experts))?;
    let registry = cfg.registry()?;
    let mut out = Output::create(&cfg.out)?;
    let data = load(&mut out, &cfg)?;
    let pairs = data.eval_pairs();
    let scores = out.stage("score", || {
        Ok(score_pairs(
            &registry,
            &data.graph,
            data.features(),
            &cfg.heuristics,
            &pairs,
        )?)
    })?;
    for (o, name) in registry.names().iter().enumerate() {
        let row = scores.row(o);
        out.write_with(&format!("{name}.scores"), |w| write_scores(w, &pairs, &row))?;
    }
    out.finish("export-scores", Some(cfg.seed), r.snapshot())
}

pub fn cmd_train_expert_mlp(args: &TrainExpertMlpCmd, mut r: Resolver) -> Result<RunManifest> {
    let cfg = RunConfig::resolve(&mut r, &args.common, None)?;
    let d = MlpTrainConfig::default();
    let mcfg = MlpTrainConfig {
        hidden: r.or("mlp_hidden", args.hidden, d.hidden)?,
        layers: r.or("mlp_layers", args.layers, d.layers)?,
        lr: r.or("mlp_lr", args.lr, d.lr)?,
        dropout: r.or("mlp_dropout", args.dropout, d.dropout)?,
        weight_decay: r.or("mlp_weight_decay", args.weight_decay, d.weight_decay)?,
        epochs: r.or("mlp_epochs", args.epochs, d.epochs)?,
        batch_size: r.or("mlp_batch_size", args.batch_size, d.batch_size)?,
    };
    let name = r.or("mlp_name", args.name.clone(), "mlp".to_string())?;
    let mut out = Output::create(&cfg.out)?;
    let data = load(&mut out, &cfg)?;
    let features = data.features().ok_or(linkmoe::Error::NoFeatures)?;
    let model = out.stage("train", || {
        let mut rng = seeded_rng(derive_seed(cfg.seed, "feature-mlp"));
        Ok(train_feature_mlp_expert(
            features,
            &data.graph,
            &data.split.train_pos,
            &mut rng,
            &mcfg,
        )?)
    })?;
    model.save(out.claim(&format!("{name}.ckpt")))?;
    out.finish("train-expert-mlp", Some(cfg.seed), r.snapshot())
}

fn gate_config(args: &TrainGateCmd, r: &mut Resolver, seed: u64) -> Result<GateTrainConfig> {
    let d = GateTrainConfig::default();
    let cfg = GateTrainConfig {
        lr: r.or("lr", args.lr, d.lr)?,
        dropout: r.or("dropout", args.dropout, d.dropout)?,
        weight_decay: r.or("weight_decay", args.weight_decay, d.weight_decay)?,
        layers: r.or("layers", args.layers, d.layers)?,
        hidden: r.or("hidden", args.hidden, d.hidden)?,
        max_epochs: r.or("max_epochs", args.max_epochs, d.max_epochs)?,
        patience: r.or("patience", args.patience, d.patience)?,
        batch_size: r.or("batch_size", args.batch_size, d.batch_size)?,
        split_ratio: r.or("split_ratio", args.split_ratio, DEFAULT_SPLIT_RATIO)?,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// A preset name, otherwise a grid file.
fn load_grid(spec: &str, base: &GateTrainConfig) -> Result<HyperGrid> {
    if let Ok(g) = HyperGrid::preset(spec) {
        return Ok(g);
    }
    let path = PathBuf::from(spec);
    if !path.is_file() {
        bail!("--grid {spec:?} is neither a preset (planetoid, pubmed, ogb) nor a file");
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    HyperGrid::parse(&text, base).with_context(|| path.display().to_string())
}

fn write_history(out: &mut Output, name: &str, h: &TrainHistory) -> Result<()> {
    out.write_with(name, |w| h.write_csv(w))
}

/// Gate-val MRR of each expert alone, for comparison with the trained gate.
fn expert_val_mrrs(prep: &PreparedGateData) -> Result<Vec<(String, f64)>> {
    let val = &prep.val;
    prep.expert_names()
        .iter()
        .enumerate()
        .map(|(o, name)| Ok((name.clone(), val.mrr_of(val.pos.scores.row(o), val.neg.scores.row(o))?)))
        .collect()
}

fn prepare(
    cfg: &RunConfig,
    data: &Dataset,
    registry: &linkmoe::experts::ExpertRegistry,
    mode: GateMode,
    ratio: f64,
    normalize: bool,
) -> Result<PreparedGateData> {
    let (train_set, val_set) = split_validation(&data.split.valid_pos, &data.split.valid_neg, ratio, cfg.seed)?;
    Ok(prepare_gate_data(
        registry,
        &data.graph,
        data.features(),
        &cfg.heuristics,
        &train_set,
        &val_set,
        mode,
        normalize,
    )?)
}

pub fn cmd_train_gate(args: &TrainGateCmd, mut r: Resolver) -> Result<RunManifest> {
    let cfg = RunConfig::resolve(&mut r, &args.common, Some(&args.experts))?;
    let mode: GateMode = r.or("mode", args.mode.clone(), "all".to_string())?.parse()?;
    r.record("mode", mode);
    let normalize = r.switch("normalize_scores", args.normalize_scores)?;
    let gcfg = gate_config(args, &mut r, cfg.seed)?;
    let grid = match r.value("grid", args.grid.clone())? {
        Some(spec) => Some(load_grid(&spec, &gcfg)?),
        None => None,
    };
    let registry = cfg.registry()?;
    let mut out = Output::create(&cfg.out)?;
    let data = load(&mut out, &cfg)?;
    mode_uses_features(mode, data.features())?;
    let prep = out.stage("prepare", || {
        prepare(&cfg, &data, &registry, mode, gcfg.split_ratio, normalize)
    })?;

    let (model, best_cfg, history) = match &grid {
        None => {
            let (model, history) = out.stage("train", || Ok(fit_link_moe(&prep, &gcfg)?))?;
            write_history(&mut out, "history.csv", &history)?;
            (model, gcfg, history)
        }
        Some(grid) => {
            let outcome = out.stage("train", || Ok(grid_search(&prep, grid, &gcfg)?))?;
            for (k, (_, h)) in outcome.runs.iter().enumerate() {
                write_history(&mut out, &format!("history_{k:03}.csv"), h)?;
            }
            out.write_with("grid_summary.csv", |w| {
                writeln!(
                    w,
                    "run,lr,dropout,weight_decay,layers,hidden,best_epoch,best_val_mrr,selected"
                )?;
                for (k, (c, h)) in outcome.runs.iter().enumerate() {
                    writeln!(
                        w,
                        "{k},{},{},{},{},{},{},{:.6},{}",
                        c.lr,
                        c.dropout,
                        c.weight_decay,
                        c.layers,
                        c.hidden,
                        h.best_epoch,
                        h.best_val_mrr,
                        (k == outcome.best) as u8
                    )?;
                }
                Ok(())
            })?;
            let (best_cfg, history) = outcome.runs[outcome.best].clone();
            (outcome.model, best_cfg, history)
        }
    };
    model.save(out.claim("model.ckpt"))?;

    let experts = expert_val_mrrs(&prep)?;
    out.write_with("val_summary.csv", |w| {
        writeln!(w, "method,val_mrr")?;
        for (name, mrr) in &experts {
            writeln!(w, "{name},{mrr:.6}")?;
        }
        writeln!(w, "moe,{:.6}", history.best_val_mrr)
    })?;
    let sidecar = format!(
        "mode = {mode}\nexperts = {}\nnormalize_scores = {normalize}\nseed = {}\nsplit_ratio = {}\n\
         lr = {}\ndropout = {}\nweight_decay = {}\nlayers = {}\nhidden = {}\nmax_epochs = {}\n\
         patience = {}\nbatch_size = {}\n# best epoch {} with gate-val MRR {:.6}\n",
        model.expert_names.join(","),
        cfg.seed,
        best_cfg.split_ratio,
        best_cfg.lr,
        best_cfg.dropout,
        best_cfg.weight_decay,
        best_cfg.layers,
        best_cfg.hidden,
        best_cfg.max_epochs,
        best_cfg.patience,
        best_cfg.batch_size,
        history.best_epoch,
        history.best_val_mrr
    );
    out.write_text("gate.cfg", &sidecar)?;
    println!(
        "best gate-val MRR {:.4} at epoch {} ({} experts, mode {mode})",
        history.best_val_mrr,
        history.best_epoch,
        model.expert_names.len()
    );
    out.finish("train-gate", Some(cfg.seed), r.snapshot())
}

pub fn cmd_ensemble(args: &EnsembleCmd, mut r: Resolver) -> Result<RunManifest> {
    let cfg = RunConfig::resolve(&mut r, &args.common, Some(&args.experts))?;
    let kind = r.choice("kind", args.kind, EnsembleKind::Mean)?;
    let registry = cfg.registry()?;
    let ecfg = match kind {
        EnsembleKind::Mean => None,
        EnsembleKind::Global => {
            let d = EnsembleTrainConfig::default();
            Some(EnsembleTrainConfig {
                lr: r.or("ensemble_lr", args.lr, d.lr)?,
                weight_decay: r.or("ensemble_weight_decay", args.weight_decay, d.weight_decay)?,
                max_epochs: r.or("ensemble_max_epochs", args.max_epochs, d.max_epochs)?,
                patience: r.or("ensemble_patience", args.patience, d.patience)?,
                batch_size: r.or("ensemble_batch_size", args.batch_size, d.batch_size)?,
                seed: cfg.seed,
            })
        }
    };
    let ratio = match kind {
        EnsembleKind::Mean => DEFAULT_SPLIT_RATIO,
        EnsembleKind::Global => r.or("split_ratio", args.split_ratio, DEFAULT_SPLIT_RATIO)?,
    };
    let mut out = Output::create(&cfg.out)?;
    let data = load(&mut out, &cfg)?;
    let pairs = data.eval_pairs();
    let scores = out.stage("score", || {
        Ok(score_pairs(
            &registry,
            &data.graph,
            data.features(),
            &cfg.heuristics,
            &pairs,
        )?)
    })?;
    match ecfg {
        None => {
            let mean = mean_ensemble(&scores)?;
            out.write_with("mean.scores", |w| write_scores(w, &pairs, &mean))?;
        }
        Some(ecfg) => {
            let prep = out.stage("prepare", || {
                prepare(&cfg, &data, &registry, GateMode::OnlyStruct, ratio, false)
            })?;
            let (weights, history) =
                out.stage("train", || Ok(train_global_ensemble(&prep.train, &prep.val, &ecfg)?))?;
            out.write_text("global.weights", &weights.to_text())?;
            write_history(&mut out, "global_history.csv", &history)?;
            let logits = weights.logits(&scores)?;
            out.write_with("global.scores", |w| write_scores(w, &pairs, &logits))?;
        }
    }
    out.finish("ensemble", Some(cfg.seed), r.snapshot())
}

pub fn cmd_predict(args: &PredictCmd, mut r: Resolver) -> Result<RunManifest> {
    let cfg = RunConfig::resolve(&mut r, &args.common, Some(&args.experts))?;
    let Some(ckpt) = r.path("checkpoint", args.checkpoint.clone()) else {
        bail!("predict needs --checkpoint");
    };
    let pairs_path = r.path("pairs", args.pairs.clone());
    let output = r.choice("output", args.output, OutputKind::Prob)?;
    let model = LinkMoe::load(&ckpt)?;
    let registry = cfg.registry()?.subset(&model.expert_names)?;
    let mut out = Output::create(&cfg.out)?;
    let data = load(&mut out, &cfg)?;
    let pairs = match &pairs_path {
        Some(p) => load_edge_list(p)?,
        None => {
            let mut pairs = data.split.test_pos.clone();
            pairs.extend(data.split.test_neg.all_pairs());
            pairs
        }
    };
    let logits = out.stage("predict", || {
        Ok(model.predict_logits(&registry, &data.graph, data.features(), &cfg.heuristics, &pairs)?)
    })?;
    let scores: Vec<f64> = match output {
        OutputKind::Logit => logits,
        OutputKind::Prob => logits.into_iter().map(sigmoid).collect(),
    };
    out.write_with("predictions.scores", |w| write_scores(w, &pairs, &scores))?;
    out.finish("predict", Some(cfg.seed), r.snapshot())
}

fn collect_methods(
    out: &mut Output,
    cfg: &RunConfig,
    data: &Dataset,
    registry: Option<&linkmoe::experts::ExpertRegistry>,
    sources: &[Source],
    set: EvalSplit,
) -> Result<Vec<MethodScores>> {
    let scorer = Scorer {
        registry,
        graph: &data.graph,
        features: data.features(),
        hcfg: &cfg.heuristics,
    };
    let eval_set = data.eval_set(set);
    out.stage("score", || {
        sources.iter().map(|s| scorer.method(s, &eval_set)).collect()
    })
}

fn resolve_sources(
    r: &mut Resolver,
    flag: &[String],
    registry: Option<&linkmoe::experts::ExpertRegistry>,
) -> Result<Vec<Source>> {
    let names = r.list("sources", flag);
    if names.is_empty() {
        bail!("no score source given; pass --source");
    }
    names.iter().map(|n| Source::parse(n, registry)).collect()
}

fn optional_registry(cfg: &RunConfig) -> Result<Option<linkmoe::experts::ExpertRegistry>> {
    if cfg.experts.is_empty() {
        Ok(None)
    } else {
        cfg.registry().map(Some)
    }
}

pub fn cmd_evaluate(args: &EvaluateCmd, mut r: Resolver) -> Result<RunManifest> {
    let cfg = RunConfig::resolve(&mut r, &args.common, Some(&args.experts))?;
    let ks = match r.value("ks", args.ks.clone())? {
        Some(text) => parse_ks(&text)?,
        None => DEFAULT_KS.to_vec(),
    };
    let set = r.choice("set", args.set, EvalSplit::Test)?;
    let registry = optional_registry(&cfg)?;
    let sources = resolve_sources(&mut r, &args.sources, registry.as_ref())?;
    let mut out = Output::create(&cfg.out)?;
    let data = load(&mut out, &cfg)?;
    let methods = collect_methods(&mut out, &cfg, &data, registry.as_ref(), &sources, set)?;
    let reports = methods
        .iter()
        .map(|m| m.report(&ks))
        .collect::<linkmoe::Result<Vec<_>>>()?;
    out.write_with("report.csv", |w| {
        writeln!(w, "method,metric,value")?;
        for (m, rep) in methods.iter().zip(&reports) {
            writeln!(w, "{},mrr,{:.6}", m.name, rep.mrr)?;
            for (k, h) in &rep.hits {
                writeln!(w, "{},hits@{k},{h:.6}", m.name)?;
            }
        }
        Ok(())
    })?;
    for (m, rep) in methods.iter().zip(&reports) {
        let hits: Vec<String> = rep.hits.iter().map(|(k, h)| format!("H@{k} {h:.4}")).collect();
        println!("{}: MRR {:.4} {}", m.name, rep.mrr, hits.join(" "));
    }
    out.finish("evaluate", Some(cfg.seed), r.snapshot())
}

fn group_spec(
    r: &mut Resolver,
    args: &AnalyzeCmd,
    values_for: impl FnOnce(GroupKey) -> Result<Vec<f64>>,
) -> Result<(GroupSpec, Vec<f64>)> {
    let key: GroupKey = r.or("group_by", args.group_by.clone(), "cn".to_string())?.parse()?;
    let values = values_for(key)?;
    let spec = match r.value("bins", args.bins.clone())? {
        Some(text) => {
            let edges = split_list(&text)
                .iter()
                .map(|s| s.parse::<f64>().with_context(|| format!("bad bin edge {s:?}")))
                .collect::<Result<Vec<_>>>()?;
            GroupSpec::new(key, edges)?
        }
        None => GroupSpec::default_for(key, &values)?,
    };
    Ok((spec, values))
}

pub fn cmd_analyze(args: &AnalyzeCmd, mut r: Resolver) -> Result<RunManifest> {
    let cfg = RunConfig::resolve(&mut r, &args.common, Some(&args.experts))?;
    let set = r.choice("set", args.set, EvalSplit::Test)?;
    let registry = optional_registry(&cfg)?;
    let (sources, k, ckpt) = match args.kind {
        AnalysisKind::GateWeights => {
            let Some(ckpt) = r.path("checkpoint", args.checkpoint.clone()) else {
                bail!("gate-weights needs --checkpoint");
            };
            (Vec::new(), 0, Some(ckpt))
        }
        _ => (
            resolve_sources(&mut r, &args.sources, registry.as_ref())?,
            r.or("k", args.k, DEFAULT_ANALYSIS_K)?,
            None,
        ),
    };
    let mut out = Output::create(&cfg.out)?;
    let data = load(&mut out, &cfg)?;
    let eval_set = data.eval_set(set);
    let values_for = |key: GroupKey| -> Result<Vec<f64>> {
        Ok(key.values(&data.graph, data.features(), &cfg.heuristics, &eval_set.pos)?)
    };
    match args.kind {
        AnalysisKind::Overlap => {
            let methods = collect_methods(&mut out, &cfg, &data, registry.as_ref(), &sources, set)?;
            let m = overlap_matrix(&methods, k)?;
            out.write_with("overlap.csv", |w| tables::write_overlap(w, &m))?;
            out.write_with("overlap_sets.csv", |w| tables::write_overlap_sets(w, &m))?;
        }
        AnalysisKind::Groups => {
            let (spec, values) = group_spec(&mut r, args, values_for)?;
            let methods = collect_methods(&mut out, &cfg, &data, registry.as_ref(), &sources, set)?;
            let report = group_breakdown(&values, &spec, &methods, k)?;
            out.write_with("groups.csv", |w| tables::write_groups(w, &report))?;
        }
        AnalysisKind::Grid => {
            let methods = collect_methods(&mut out, &cfg, &data, registry.as_ref(), &sources, set)?;
            let grid = combination_grid(&methods, k)?;
            out.write_with("grid.csv", |w| tables::write_grid(w, &grid))?;
        }
        AnalysisKind::GateWeights => {
            let model = LinkMoe::load(ckpt.as_ref().expect("resolved above"))?;
            let (spec, values) = group_spec(&mut r, args, values_for)?;
            let inputs = model.inputs(&data.graph, data.features(), &cfg.heuristics, &eval_set.pos)?;
            let groups = avg_gate_weights_per_group(&model.gate, &inputs, &values, &spec)?;
            out.write_with("gate_weights.csv", |w| {
                tables::write_gate_weights(w, &groups, &model.expert_names)
            })?;
        }
    }
    out.finish("analyze", Some(cfg.seed), r.snapshot())
}
