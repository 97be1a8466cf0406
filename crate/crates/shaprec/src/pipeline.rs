//! Stage orchestration with on-disk artifacts and resume.
//!
//! Every stage writes its outputs into the configured `out_dir`, embedding
//! the config hash and seed. On rerun a stage is skipped when its artifacts
//! exist with a matching hash and no upstream stage recomputed; deleting an
//! artifact (or changing the config) recomputes that stage and everything
//! after it. All computation is deterministic given the config, so reruns
//! reproduce artifacts byte for byte.
//!
//! `run_all` executes the whole chain. The per-stage entry points
//! (`cmd_prepare`, `cmd_inject`, ...) recompute exactly their own stage and
//! error with a pointer to the missing command when prerequisites are
//! absent.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::PipelineConfig;
use crate::corpus::{
    filter_corpus, load_events, read_split_manifest, split_corpus, write_index_maps,
    write_split_manifest, InteractionCorpus, SplitCorpus,
};
use crate::dae::{train, DaeModel, TrainOutcome};
use crate::error::{Error, Result};
use crate::evalkit::{
    evaluate_model, exclusion_curve, overlap, validation_ndcg, write_exclusion_curve,
    write_metric_table, ExclusionMode, ExclusionOrder, OverlapSide,
};
use crate::noisebench::{
    corrupt_from_ledger, inject, read_ledger, write_ledger, CorruptCorpus,
};
use crate::numerics::Rng;
use crate::pruner::{
    prune_by_score, read_value_report, retained_view, retrain, score_pred, score_random,
    score_sim, write_value_report, PairScores, PruneMethod, ValueReport,
};
use crate::shapley::{
    explain_all, read_value_export, train_explainer, write_value_export, ShapleyExplainer,
};

const PRUNE_RANDOM_STREAM: u64 = 0x5052554e45;

pub const SPLIT_MANIFEST: &str = "split_manifest.tsv";
pub const USER_INDEX: &str = "user_index.tsv";
pub const ITEM_INDEX: &str = "item_index.tsv";
pub const NOISE_LEDGER: &str = "noise_ledger.tsv";
pub const BASE_MODEL: &str = "base_model.ckpt";
pub const BASE_LOG: &str = "base_train_log.tsv";
pub const CLEAN_MODEL: &str = "clean_model.ckpt";
pub const CLEAN_LOG: &str = "clean_train_log.tsv";
pub const EXPLAINER: &str = "explainer.ckpt";
pub const EXPLAINER_LOG: &str = "explainer_train_log.tsv";
pub const VALUES: &str = "values.tsv";
pub const VALUE_REPORT: &str = "value_report.tsv";
pub const PRUNED_MODEL: &str = "pruned_model.ckpt";
pub const PRUNED_LOG: &str = "pruned_train_log.tsv";
pub const METRICS_CLEAN: &str = "metrics_clean.tsv";
pub const METRICS_CORRUPT: &str = "metrics_corrupt.tsv";
pub const METRICS_PRUNED: &str = "metrics_pruned.tsv";
pub const OVERLAP: &str = "overlap.tsv";

fn stage_err(stage: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::Stage {
        stage,
        source: Box::new(e),
    }
}

/// True when the artifact exists and carries the current config hash.
fn artifact_valid(path: &Path, hash: &str) -> bool {
    let Ok(text) = fs::read_to_string(path) else {
        return false;
    };
    let comment = format!("# config_hash={hash}");
    let header = format!("header\tconfig_hash\t{hash}");
    text.lines()
        .take(64)
        .any(|line| line == comment || line == header)
}

fn missing(path: PathBuf, command: &str) -> Error {
    Error::MissingArtifact {
        path,
        command: command.to_string(),
    }
}

/// Ingest and filter the raw dataset (deterministic, always recomputed).
pub fn build_corpus(cfg: &PipelineConfig) -> Result<InteractionCorpus> {
    let events = load_events(&cfg.dataset_path, cfg.dataset_format)?;
    filter_corpus(&events, cfg.min_user_interactions, cfg.min_item_interactions)
}

fn write_train_log(outcome: &TrainOutcome, path: &Path, cfg: &PipelineConfig) -> Result<()> {
    let mut out = String::new();
    for (k, v) in cfg.artifact_meta() {
        out.push_str(&format!("# {k}={v}\n"));
    }
    if let Some(best) = outcome.best_epoch {
        out.push_str(&format!("# best_epoch={best}\n"));
    }
    out.push_str("# columns: epoch\tmean_loss\tvalidation_ndcg10\n");
    for stat in &outcome.trace {
        let val = stat
            .validation_score
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!("{}\t{}\t{}\n", stat.epoch, stat.mean_loss, val));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn explainer_log(trace: &[crate::shapley::ExplainerEpoch], path: &Path, cfg: &PipelineConfig) -> Result<()> {
    let mut out = String::new();
    for (k, v) in cfg.artifact_meta() {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str("# columns: epoch\tmean_loss\n");
    for stat in trace {
        out.push_str(&format!("{}\t{}\n", stat.epoch, stat.mean_loss));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------
// prepare

fn compute_prepare(cfg: &PipelineConfig, corpus: &InteractionCorpus) -> Result<SplitCorpus> {
    let split = split_corpus(corpus, cfg.train_ratio, cfg.validation_ratio, cfg.seed)?;
    let meta = cfg.artifact_meta();
    write_index_maps(corpus, &cfg.out_dir, &meta)?;
    write_split_manifest(&split, &cfg.out_dir.join(SPLIT_MANIFEST), &meta)?;
    Ok(split)
}

fn load_split(cfg: &PipelineConfig, corpus: &InteractionCorpus) -> Result<SplitCorpus> {
    let path = cfg.out_dir.join(SPLIT_MANIFEST);
    if !artifact_valid(&path, &cfg.hash()) {
        return Err(missing(path, "prepare"));
    }
    read_split_manifest(corpus, &path)
}

fn ensure_prepare(
    cfg: &PipelineConfig,
    corpus: &InteractionCorpus,
    dirty: &mut bool,
) -> Result<SplitCorpus> {
    let hash = cfg.hash();
    let all_valid = [SPLIT_MANIFEST, USER_INDEX, ITEM_INDEX]
        .iter()
        .all(|name| artifact_valid(&cfg.out_dir.join(name), &hash));
    if !*dirty && all_valid {
        return read_split_manifest(corpus, &cfg.out_dir.join(SPLIT_MANIFEST));
    }
    *dirty = true;
    compute_prepare(cfg, corpus)
}

/// `prepare`: filter the dataset, split it, and write the index maps and
/// split manifest.
pub fn cmd_prepare(cfg: &PipelineConfig) -> Result<SplitCorpus> {
    let err = stage_err("prepare");
    let corpus = build_corpus(cfg).map_err(err)?;
    compute_prepare(cfg, &corpus).map_err(stage_err("prepare"))
}

// ---------------------------------------------------------------------
// inject

fn compute_inject(cfg: &PipelineConfig, split: &SplitCorpus) -> Result<CorruptCorpus> {
    let mut rng = Rng::new(cfg.noise_seed());
    let held_out = split.validation.union(&split.test);
    let corrupt = inject(
        &split.train,
        cfg.noise_k_percent,
        cfg.noise_strategy,
        &mut rng,
        Some(&held_out),
    )?;
    write_ledger(
        &corrupt.ledger,
        &split.train,
        &cfg.out_dir.join(NOISE_LEDGER),
        &cfg.artifact_meta(),
    )?;
    Ok(corrupt)
}

fn load_corrupt(cfg: &PipelineConfig, split: &SplitCorpus) -> Result<CorruptCorpus> {
    let path = cfg.out_dir.join(NOISE_LEDGER);
    if !artifact_valid(&path, &cfg.hash()) {
        return Err(missing(path, "inject"));
    }
    let ledger = read_ledger(&split.train, &path)?;
    Ok(corrupt_from_ledger(&split.train, ledger))
}

fn ensure_inject(
    cfg: &PipelineConfig,
    split: &SplitCorpus,
    dirty: &mut bool,
) -> Result<CorruptCorpus> {
    if !*dirty && artifact_valid(&cfg.out_dir.join(NOISE_LEDGER), &cfg.hash()) {
        return load_corrupt(cfg, split);
    }
    *dirty = true;
    compute_inject(cfg, split)
}

/// `inject`: flip per-user non-interacted pairs to 1 and write the ledger.
pub fn cmd_inject(cfg: &PipelineConfig) -> Result<CorruptCorpus> {
    let err = stage_err("inject");
    let corpus = build_corpus(cfg).map_err(&err)?;
    let split = load_split(cfg, &corpus).map_err(&err)?;
    compute_inject(cfg, &split).map_err(&err)
}

// ---------------------------------------------------------------------
// model training stages

fn train_with_validation(
    cfg: &PipelineConfig,
    input: &InteractionCorpus,
    validation: &InteractionCorpus,
) -> Result<TrainOutcome> {
    let train_cfg = cfg.dae_train_config();
    let scorer = |m: &DaeModel| validation_ndcg(m, input, validation, 10);
    let has_validation = validation.total_interactions() > 0;
    let validation_fn: Option<&dyn Fn(&DaeModel) -> f64> =
        if has_validation { Some(&scorer) } else { None };
    train(input, &train_cfg, None, validation_fn)
}

fn compute_model_stage(
    cfg: &PipelineConfig,
    input: &InteractionCorpus,
    validation: &InteractionCorpus,
    model_name: &str,
    log_name: &str,
) -> Result<DaeModel> {
    let outcome = train_with_validation(cfg, input, validation)?;
    let mut extra = cfg.artifact_meta();
    if let Some(best) = outcome.best_epoch {
        extra.push(("best_epoch".to_string(), best.to_string()));
    }
    outcome.model.save(&cfg.out_dir.join(model_name), &extra)?;
    write_train_log(&outcome, &cfg.out_dir.join(log_name), cfg)?;
    Ok(outcome.model)
}

fn load_model(cfg: &PipelineConfig, name: &str, command: &str) -> Result<DaeModel> {
    let path = cfg.out_dir.join(name);
    if !artifact_valid(&path, &cfg.hash()) {
        return Err(missing(path, command));
    }
    DaeModel::load(&path)
}

fn ensure_model(
    cfg: &PipelineConfig,
    input: &InteractionCorpus,
    validation: &InteractionCorpus,
    model_name: &str,
    log_name: &str,
    dirty: &mut bool,
) -> Result<DaeModel> {
    let path = cfg.out_dir.join(model_name);
    if !*dirty
        && artifact_valid(&path, &cfg.hash())
        && artifact_valid(&cfg.out_dir.join(log_name), &cfg.hash())
    {
        return DaeModel::load(&path);
    }
    *dirty = true;
    compute_model_stage(cfg, input, validation, model_name, log_name)
}

/// `train-base`: train the base model on the corrupt training set.
pub fn cmd_train_base(cfg: &PipelineConfig) -> Result<DaeModel> {
    let err = stage_err("train-base");
    let corpus = build_corpus(cfg).map_err(&err)?;
    let split = load_split(cfg, &corpus).map_err(&err)?;
    let corrupt = load_corrupt(cfg, &split).map_err(&err)?;
    compute_model_stage(cfg, &corrupt.merged, &split.validation, BASE_MODEL, BASE_LOG)
        .map_err(&err)
}

// ---------------------------------------------------------------------
// explainer

fn compute_explainer(
    cfg: &PipelineConfig,
    base: &DaeModel,
    corrupt: &CorruptCorpus,
) -> Result<ShapleyExplainer> {
    let outcome = train_explainer(base, &corrupt.merged, &cfg.explainer_config())?;
    outcome
        .explainer
        .save(&cfg.out_dir.join(EXPLAINER), &cfg.artifact_meta())?;
    explainer_log(&outcome.trace, &cfg.out_dir.join(EXPLAINER_LOG), cfg)?;
    Ok(outcome.explainer)
}

fn load_explainer(cfg: &PipelineConfig) -> Result<ShapleyExplainer> {
    let path = cfg.out_dir.join(EXPLAINER);
    if !artifact_valid(&path, &cfg.hash()) {
        return Err(missing(path, "train-explainer"));
    }
    ShapleyExplainer::load(&path)
}

fn ensure_explainer(
    cfg: &PipelineConfig,
    base: &DaeModel,
    corrupt: &CorruptCorpus,
    dirty: &mut bool,
) -> Result<ShapleyExplainer> {
    if !*dirty && artifact_valid(&cfg.out_dir.join(EXPLAINER), &cfg.hash()) {
        return load_explainer(cfg);
    }
    *dirty = true;
    compute_explainer(cfg, base, corrupt)
}

/// `train-explainer`: fit the amortized valuation network against the
/// frozen base model.
pub fn cmd_train_explainer(cfg: &PipelineConfig) -> Result<ShapleyExplainer> {
    let err = stage_err("train-explainer");
    let corpus = build_corpus(cfg).map_err(&err)?;
    let split = load_split(cfg, &corpus).map_err(&err)?;
    let corrupt = load_corrupt(cfg, &split).map_err(&err)?;
    let base = load_model(cfg, BASE_MODEL, "train-base").map_err(&err)?;
    compute_explainer(cfg, &base, &corrupt).map_err(&err)
}

// ---------------------------------------------------------------------
// explain (value export)

fn compute_values(
    cfg: &PipelineConfig,
    explainer: &ShapleyExplainer,
    base: &DaeModel,
    corrupt: &CorruptCorpus,
) -> Result<PairScores> {
    let values = explain_all(explainer, base, &corrupt.merged)?;
    write_value_export(
        &corrupt.merged,
        &values,
        &cfg.out_dir.join(VALUES),
        &cfg.artifact_meta(),
    )?;
    Ok(values)
}

fn load_values(cfg: &PipelineConfig, corrupt: &CorruptCorpus) -> Result<PairScores> {
    let path = cfg.out_dir.join(VALUES);
    if !artifact_valid(&path, &cfg.hash()) {
        return Err(missing(path, "explain"));
    }
    read_value_export(&corrupt.merged, &path)
}

fn ensure_values(
    cfg: &PipelineConfig,
    explainer: &ShapleyExplainer,
    base: &DaeModel,
    corrupt: &CorruptCorpus,
    dirty: &mut bool,
) -> Result<PairScores> {
    if !*dirty && artifact_valid(&cfg.out_dir.join(VALUES), &cfg.hash()) {
        return load_values(cfg, corrupt);
    }
    *dirty = true;
    compute_values(cfg, explainer, base, corrupt)
}

/// `explain`: one forward pass per user; export per-interaction values.
pub fn cmd_explain(cfg: &PipelineConfig) -> Result<PairScores> {
    let err = stage_err("explain");
    let corpus = build_corpus(cfg).map_err(&err)?;
    let split = load_split(cfg, &corpus).map_err(&err)?;
    let corrupt = load_corrupt(cfg, &split).map_err(&err)?;
    let base = load_model(cfg, BASE_MODEL, "train-base").map_err(&err)?;
    let explainer = load_explainer(cfg).map_err(&err)?;
    compute_values(cfg, &explainer, &base, &corrupt).map_err(&err)
}

// ---------------------------------------------------------------------
// prune

fn method_scores(
    cfg: &PipelineConfig,
    corrupt: &CorruptCorpus,
    base: &DaeModel,
    values: &PairScores,
) -> Result<PairScores> {
    match cfg.prune_method {
        PruneMethod::Svv => Ok(values.clone()),
        PruneMethod::Random => {
            let mut rng = Rng::new(cfg.seed).derive(PRUNE_RANDOM_STREAM);
            Ok(score_random(corrupt, &mut rng))
        }
        PruneMethod::Pred => score_pred(corrupt, base),
        PruneMethod::Sim => Ok(score_sim(corrupt)),
    }
}

fn compute_prune(
    cfg: &PipelineConfig,
    corrupt: &CorruptCorpus,
    base: &DaeModel,
    values: &PairScores,
) -> Result<ValueReport> {
    let scores = method_scores(cfg, corrupt, base, values)?;
    let report = prune_by_score(corrupt, &scores, cfg.prune_method, cfg.prune_k_percent)?;
    write_value_report(
        &report,
        corrupt,
        &cfg.out_dir.join(VALUE_REPORT),
        &cfg.artifact_meta(),
    )?;
    Ok(report)
}

fn load_report(cfg: &PipelineConfig, corrupt: &CorruptCorpus) -> Result<ValueReport> {
    let path = cfg.out_dir.join(VALUE_REPORT);
    if !artifact_valid(&path, &cfg.hash()) {
        return Err(missing(path, "prune"));
    }
    read_value_report(corrupt, &path)
}

fn ensure_prune(
    cfg: &PipelineConfig,
    corrupt: &CorruptCorpus,
    base: &DaeModel,
    values: &PairScores,
    dirty: &mut bool,
) -> Result<ValueReport> {
    if !*dirty && artifact_valid(&cfg.out_dir.join(VALUE_REPORT), &cfg.hash()) {
        return load_report(cfg, corrupt);
    }
    *dirty = true;
    compute_prune(cfg, corrupt, base, values)
}

/// `prune`: rank interactions by the configured method and drop the
/// bottom k%.
pub fn cmd_prune(cfg: &PipelineConfig) -> Result<ValueReport> {
    let err = stage_err("prune");
    let corpus = build_corpus(cfg).map_err(&err)?;
    let split = load_split(cfg, &corpus).map_err(&err)?;
    let corrupt = load_corrupt(cfg, &split).map_err(&err)?;
    let base = load_model(cfg, BASE_MODEL, "train-base").map_err(&err)?;
    let values = if cfg.prune_method == PruneMethod::Svv {
        load_values(cfg, &corrupt).map_err(&err)?
    } else {
        PairScores::new()
    };
    compute_prune(cfg, &corrupt, &base, &values).map_err(&err)
}

// ---------------------------------------------------------------------
// retrain

fn compute_retrain(
    cfg: &PipelineConfig,
    corrupt: &CorruptCorpus,
    report: &ValueReport,
    split: &SplitCorpus,
) -> Result<DaeModel> {
    let view = retained_view(corrupt, report);
    let scorer = |m: &DaeModel| validation_ndcg(m, &view, &split.validation, 10);
    let has_validation = split.validation.total_interactions() > 0;
    let validation_fn: Option<&dyn Fn(&DaeModel) -> f64> =
        if has_validation { Some(&scorer) } else { None };
    let (outcome, _dropped) = retrain(corrupt, report, &cfg.dae_train_config(), validation_fn)?;
    let mut extra = cfg.artifact_meta();
    if let Some(best) = outcome.best_epoch {
        extra.push(("best_epoch".to_string(), best.to_string()));
    }
    outcome.model.save(&cfg.out_dir.join(PRUNED_MODEL), &extra)?;
    write_train_log(&outcome, &cfg.out_dir.join(PRUNED_LOG), cfg)?;
    Ok(outcome.model)
}

fn ensure_retrain(
    cfg: &PipelineConfig,
    corrupt: &CorruptCorpus,
    report: &ValueReport,
    split: &SplitCorpus,
    dirty: &mut bool,
) -> Result<DaeModel> {
    if !*dirty && artifact_valid(&cfg.out_dir.join(PRUNED_MODEL), &cfg.hash()) {
        return DaeModel::load(&cfg.out_dir.join(PRUNED_MODEL));
    }
    *dirty = true;
    compute_retrain(cfg, corrupt, report, split)
}

/// `retrain`: train from scratch on the retained interactions.
pub fn cmd_retrain(cfg: &PipelineConfig) -> Result<DaeModel> {
    let err = stage_err("retrain");
    let corpus = build_corpus(cfg).map_err(&err)?;
    let split = load_split(cfg, &corpus).map_err(&err)?;
    let corrupt = load_corrupt(cfg, &split).map_err(&err)?;
    let report = load_report(cfg, &corrupt).map_err(&err)?;
    compute_retrain(cfg, &corrupt, &report, &split).map_err(&err)
}

// ---------------------------------------------------------------------
// evaluate

/// Metric tables for the clean-trained, corrupt-trained, and pruned-
/// retrained models, in that order.
pub struct EvaluationArtifacts {
    pub clean: crate::evalkit::MetricTable,
    pub corrupt: crate::evalkit::MetricTable,
    pub pruned: crate::evalkit::MetricTable,
}

fn compute_evaluate(
    cfg: &PipelineConfig,
    split: &SplitCorpus,
    corrupt: &CorruptCorpus,
    base: &DaeModel,
    clean: &DaeModel,
    pruned: &DaeModel,
    report: &ValueReport,
) -> Result<EvaluationArtifacts> {
    let meta = cfg.artifact_meta();
    let ks = &cfg.eval_ks;

    let clean_exclude = split.train_plus_validation();
    let clean_table = evaluate_model(clean, &split.train, &clean_exclude, &split.test, ks)?;
    write_metric_table(&clean_table, &cfg.out_dir.join(METRICS_CLEAN), &meta)?;

    // corrupt-pipeline models share one candidate pool so they compare
    // against the same baseline
    let corrupt_exclude = corrupt.merged.union(&split.validation);
    let corrupt_table =
        evaluate_model(base, &corrupt.merged, &corrupt_exclude, &split.test, ks)?;
    write_metric_table(&corrupt_table, &cfg.out_dir.join(METRICS_CORRUPT), &meta)?;

    let pruned_view = retained_view(corrupt, report);
    let pruned_table = evaluate_model(pruned, &pruned_view, &corrupt_exclude, &split.test, ks)?;
    write_metric_table(&pruned_table, &cfg.out_dir.join(METRICS_PRUNED), &meta)?;

    Ok(EvaluationArtifacts {
        clean: clean_table,
        corrupt: corrupt_table,
        pruned: pruned_table,
    })
}

#[allow(clippy::too_many_arguments)]
fn ensure_evaluate(
    cfg: &PipelineConfig,
    split: &SplitCorpus,
    corrupt: &CorruptCorpus,
    base: &DaeModel,
    clean: &DaeModel,
    pruned: &DaeModel,
    report: &ValueReport,
    dirty: &mut bool,
) -> Result<EvaluationArtifacts> {
    let hash = cfg.hash();
    let all_valid = [METRICS_CLEAN, METRICS_CORRUPT, METRICS_PRUNED]
        .iter()
        .all(|name| artifact_valid(&cfg.out_dir.join(name), &hash));
    if !*dirty && all_valid {
        return Ok(EvaluationArtifacts {
            clean: crate::evalkit::read_metric_table(&cfg.out_dir.join(METRICS_CLEAN))?,
            corrupt: crate::evalkit::read_metric_table(&cfg.out_dir.join(METRICS_CORRUPT))?,
            pruned: crate::evalkit::read_metric_table(&cfg.out_dir.join(METRICS_PRUNED))?,
        });
    }
    *dirty = true;
    compute_evaluate(cfg, split, corrupt, base, clean, pruned, report)
}

/// `evaluate`: metric tables for the clean, corrupt, and pruned models.
/// Trains the clean reference model if its checkpoint is missing.
pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<EvaluationArtifacts> {
    let err = stage_err("evaluate");
    let corpus = build_corpus(cfg).map_err(&err)?;
    let split = load_split(cfg, &corpus).map_err(&err)?;
    let corrupt = load_corrupt(cfg, &split).map_err(&err)?;
    let base = load_model(cfg, BASE_MODEL, "train-base").map_err(&err)?;
    let mut dirty = false;
    let clean = ensure_model(cfg, &split.train, &split.validation, CLEAN_MODEL, CLEAN_LOG, &mut dirty)
        .map_err(&err)?;
    let report = load_report(cfg, &corrupt).map_err(&err)?;
    let pruned = load_model(cfg, PRUNED_MODEL, "retrain").map_err(&err)?;
    compute_evaluate(cfg, &split, &corrupt, &base, &clean, &pruned, &report).map_err(&err)
}

// ---------------------------------------------------------------------
// overlap

/// Overlap of the top/bottom prune_k% score slices with the injected
/// noise, written alongside the analytic random-baseline expectation.
pub struct OverlapArtifacts {
    pub top: crate::evalkit::OverlapResult,
    pub bottom: crate::evalkit::OverlapResult,
    /// |D_noise| / |D_corrupt| · 100, what a uniform scorer attains in
    /// expectation.
    pub random_expectation: f64,
}

fn compute_overlap(
    cfg: &PipelineConfig,
    corrupt: &CorruptCorpus,
    report: &ValueReport,
) -> Result<OverlapArtifacts> {
    let fraction = cfg.prune_k_percent / 100.0;
    let top = overlap(report, &corrupt.ledger, OverlapSide::Top, fraction)?;
    let bottom = overlap(report, &corrupt.ledger, OverlapSide::Bottom, fraction)?;
    let random_expectation =
        100.0 * corrupt.ledger.injected.len() as f64 / corrupt.total_interactions() as f64;
    let mut out = String::new();
    for (k, v) in cfg.artifact_meta() {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!("# method={}\n", report.method));
    out.push_str(&format!("# fraction={fraction}\n"));
    out.push_str(&format!("# analytic_random_expectation={random_expectation}\n"));
    out.push_str("# columns: side\tslice_size\tnoise_in_slice\tpercentage\n");
    for r in [&top, &bottom] {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.side, r.candidate_size, r.intersection, r.percentage
        ));
    }
    let path = cfg.out_dir.join(OVERLAP);
    fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    Ok(OverlapArtifacts {
        top,
        bottom,
        random_expectation,
    })
}

/// `overlap`: how much injected noise the score ranking isolates.
pub fn cmd_overlap(cfg: &PipelineConfig) -> Result<OverlapArtifacts> {
    let err = stage_err("overlap");
    let corpus = build_corpus(cfg).map_err(&err)?;
    let split = load_split(cfg, &corpus).map_err(&err)?;
    let corrupt = load_corrupt(cfg, &split).map_err(&err)?;
    let report = load_report(cfg, &corrupt).map_err(&err)?;
    compute_overlap(cfg, &corrupt, &report).map_err(&err)
}

// ---------------------------------------------------------------------
// exclusion

pub fn exclusion_artifact_name(mode: ExclusionMode, order: ExclusionOrder) -> String {
    format!("exclusion_{mode}_{order}.tsv")
}

/// `exclusion`: retrain-and-evaluate sweep over Shapley-ranked buckets.
/// Requires the value export from `explain` and the base model.
pub fn cmd_exclusion(
    cfg: &PipelineConfig,
    mode: ExclusionMode,
    order: ExclusionOrder,
) -> Result<crate::evalkit::ExclusionCurve> {
    let err = stage_err("exclusion");
    let corpus = build_corpus(cfg).map_err(&err)?;
    let split = load_split(cfg, &corpus).map_err(&err)?;
    let corrupt = load_corrupt(cfg, &split).map_err(&err)?;
    let values = load_values(cfg, &corrupt).map_err(&err)?;
    let base = load_model(cfg, BASE_MODEL, "train-base").map_err(&err)?;
    let curve = exclusion_curve(
        &corrupt,
        &split,
        &values,
        mode,
        order,
        cfg.exclusion_buckets,
        cfg.exclusion_span,
        &cfg.dae_train_config(),
        Some(&base),
    )
    .map_err(&err)?;
    write_exclusion_curve(
        &curve,
        &cfg.out_dir.join(exclusion_artifact_name(mode, order)),
        &cfg.artifact_meta(),
    )
    .map_err(&err)?;
    Ok(curve)
}

// ---------------------------------------------------------------------
// run-all

/// Everything the full pipeline produced, for reporting.
pub struct RunSummary {
    pub n_users: usize,
    pub n_items: usize,
    pub injected: usize,
    pub removed: usize,
    pub noise_in_removed: usize,
    pub evaluation: EvaluationArtifacts,
    pub overlap: OverlapArtifacts,
}

/// Execute the full chain:
/// prepare → inject → train base (corrupt) → train clean reference →
/// train explainer → explain → prune → retrain → evaluate × 3 → overlap.
///
/// Stages with valid on-disk artifacts are reused; the first recomputed
/// stage forces every later stage to recompute.
pub fn run_all(cfg: &PipelineConfig, log: &mut dyn FnMut(&str)) -> Result<RunSummary> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut dirty = false;

    log("prepare: filtering and splitting dataset");
    let corpus = build_corpus(cfg).map_err(stage_err("prepare"))?;
    let split = ensure_prepare(cfg, &corpus, &mut dirty).map_err(stage_err("prepare"))?;

    log("inject: planting simulated noise");
    let corrupt = ensure_inject(cfg, &split, &mut dirty).map_err(stage_err("inject"))?;

    log("train-base: training on the corrupt set");
    let base = ensure_model(cfg, &corrupt.merged, &split.validation, BASE_MODEL, BASE_LOG, &mut dirty)
        .map_err(stage_err("train-base"))?;

    log("train-clean: training the clean reference");
    let clean = ensure_model(cfg, &split.train, &split.validation, CLEAN_MODEL, CLEAN_LOG, &mut dirty)
        .map_err(stage_err("train-clean"))?;

    log("train-explainer: fitting the amortized valuation network");
    let explainer = ensure_explainer(cfg, &base, &corrupt, &mut dirty)
        .map_err(stage_err("train-explainer"))?;

    log("explain: exporting per-interaction values");
    let values = ensure_values(cfg, &explainer, &base, &corrupt, &mut dirty)
        .map_err(stage_err("explain"))?;

    log("prune: ranking and thresholding");
    let report =
        ensure_prune(cfg, &corrupt, &base, &values, &mut dirty).map_err(stage_err("prune"))?;

    log("retrain: training on the retained set");
    let pruned =
        ensure_retrain(cfg, &corrupt, &report, &split, &mut dirty).map_err(stage_err("retrain"))?;

    log("evaluate: scoring clean/corrupt/pruned models");
    let evaluation = ensure_evaluate(
        cfg, &split, &corrupt, &base, &clean, &pruned, &report, &mut dirty,
    )
    .map_err(stage_err("evaluate"))?;

    log("overlap: comparing ranking against the noise ledger");
    let overlap_artifacts =
        compute_overlap(cfg, &corrupt, &report).map_err(stage_err("overlap"))?;

    let noise_in_removed = report
        .removed
        .iter()
        .filter(|p| corrupt.ledger.injected.contains(p))
        .count();
    Ok(RunSummary {
        n_users: corpus.n_users(),
        n_items: corpus.n_items(),
        injected: corrupt.ledger.injected.len(),
        removed: report.removed.len(),
        noise_in_removed,
        evaluation,
        overlap: overlap_artifacts,
    })
}

/// Scores map for external consumers: svv values joined with removal flags.
pub fn report_scores(report: &ValueReport) -> &BTreeMap<(usize, usize), f64> {
    &report.scores
}
