//! Score-ranked pruning and retraining, plus the baseline scorers.
//!
//! All methods share one mechanism: score every interaction in the corrupt
//! training set, sort ascending, drop the global bottom k%, retrain from
//! scratch on what remains. Only the scores differ — Shapley values,
//! uniform random, model predictions, or item cosine similarity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::InteractionCorpus;
use crate::dae::{train, DaeModel, TrainConfig, TrainOutcome};
use crate::error::{Error, Result};
use crate::noisebench::CorruptCorpus;
use crate::numerics::Rng;

/// Score per (user, item) interaction.
pub type PairScores = BTreeMap<(usize, usize), f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneMethod {
    /// Shapley-value valuation scores from the explainer.
    Svv,
    Random,
    /// Base-model predicted score; lowest predictions pruned first.
    Pred,
    /// Mean cosine similarity to the user's other items.
    Sim,
}

impl std::fmt::Display for PruneMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PruneMethod::Svv => "svv",
            PruneMethod::Random => "random",
            PruneMethod::Pred => "pred",
            PruneMethod::Sim => "sim",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for PruneMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svv" => Ok(PruneMethod::Svv),
            "random" => Ok(PruneMethod::Random),
            "pred" => Ok(PruneMethod::Pred),
            "sim" => Ok(PruneMethod::Sim),
            other => Err(Error::Config(format!("unknown prune method `{other}`"))),
        }
    }
}

/// Outcome of ranking and thresholding the corrupt training set.
#[derive(Debug, Clone)]
pub struct ValueReport {
    pub method: PruneMethod,
    pub k_percent: f64,
    /// Highest removed score; −∞ when nothing was removed.
    pub threshold: f64,
    pub scores: PairScores,
    pub removed: BTreeSet<(usize, usize)>,
    pub retained: BTreeSet<(usize, usize)>,
}

/// Interactions of `corrupt` sorted ascending by (score, user, item) — the
/// canonical ranking shared by pruning and overlap analysis.
pub fn ranked_pairs(corrupt: &CorruptCorpus, scores: &PairScores) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::with_capacity(corrupt.total_interactions());
    for (u, v) in corrupt.merged.pairs() {
        if !scores.contains_key(&(u, v)) {
            return Err(Error::MissingScore { user: u, item: v });
        }
        pairs.push((u, v));
    }
    pairs.sort_by(|a, b| {
        scores[a]
            .partial_cmp(&scores[b])
            .expect("scores must be finite")
            .then(a.cmp(b))
    });
    Ok(pairs)
}

/// Remove the global bottom `⌊k% · |D_corrupt|⌋` interactions by score.
/// Ties at the threshold break by (user, item) ascending.
pub fn prune_by_score(
    corrupt: &CorruptCorpus,
    scores: &PairScores,
    method: PruneMethod,
    k_percent: f64,
) -> Result<ValueReport> {
    assert!((0.0..=100.0).contains(&k_percent));
    let ranked = ranked_pairs(corrupt, scores)?;
    let total = ranked.len();
    let remove_count = (k_percent * total as f64 / 100.0).floor() as usize;
    let removed: BTreeSet<(usize, usize)> = ranked[..remove_count].iter().copied().collect();
    let retained: BTreeSet<(usize, usize)> = ranked[remove_count..].iter().copied().collect();
    let threshold = if remove_count > 0 {
        scores[&ranked[remove_count - 1]]
    } else {
        f64::NEG_INFINITY
    };
    Ok(ValueReport {
        method,
        k_percent,
        threshold,
        scores: scores.clone(),
        removed,
        retained,
    })
}

/// Independent uniform score per interaction; deterministic given the rng.
pub fn score_random(corrupt: &CorruptCorpus, rng: &mut Rng) -> PairScores {
    let mut scores = PairScores::new();
    for (u, v) in corrupt.merged.pairs() {
        scores.insert((u, v), rng.next_f64());
    }
    scores
}

/// Score of (u, v) is the model's prediction at v on the user's full
/// corrupt vector.
pub fn score_pred(corrupt: &CorruptCorpus, model: &DaeModel) -> Result<PairScores> {
    let mut scores = PairScores::new();
    for u in 0..corrupt.merged.n_users() {
        if corrupt.merged.degree(u) == 0 {
            continue;
        }
        let r = corrupt.merged.user_vector(u)?;
        let pred = model.forward(&r)?;
        for &v in corrupt.merged.row(u) {
            scores.insert((u, v), pred[v]);
        }
    }
    Ok(scores)
}

/// Score of (u, v) is the mean cosine similarity between item v's column
/// of the corrupt matrix and the columns of the user's other items.
/// Degree-1 users get score 1 (Sim never prunes them).
pub fn score_sim(corrupt: &CorruptCorpus) -> PairScores {
    let view = &corrupt.merged;
    // item columns as sorted user lists
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); view.n_items()];
    for (u, v) in view.pairs() {
        columns[v].push(u);
    }
    let norms: Vec<f64> = columns.iter().map(|c| (c.len() as f64).sqrt()).collect();
    let cosine = |a: usize, b: usize| -> f64 {
        if columns[a].is_empty() || columns[b].is_empty() {
            return 0.0;
        }
        let mut i = 0;
        let mut j = 0;
        let mut hits = 0usize;
        while i < columns[a].len() && j < columns[b].len() {
            match columns[a][i].cmp(&columns[b][j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    hits += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        hits as f64 / (norms[a] * norms[b])
    };
    let mut scores = PairScores::new();
    for u in 0..view.n_users() {
        let items = view.row(u);
        if items.len() == 1 {
            scores.insert((u, items[0]), 1.0);
            continue;
        }
        for &v in items {
            let mut acc = 0.0;
            for &w in items {
                if w != v {
                    acc += cosine(v, w);
                }
            }
            scores.insert((u, v), acc / (items.len() - 1) as f64);
        }
    }
    scores
}

/// Retrain from scratch on the retained set. Users left with nothing are
/// dropped from training; their indices are returned alongside the outcome.
pub fn retrain(
    corrupt: &CorruptCorpus,
    report: &ValueReport,
    config: &TrainConfig,
    validation: Option<&dyn Fn(&DaeModel) -> f64>,
) -> Result<(TrainOutcome, Vec<usize>)> {
    if report.retained.is_empty() {
        return Err(Error::EmptyRetainedSet);
    }
    let view = corrupt.merged.with_pairs(report.retained.iter().copied());
    let dropped: Vec<usize> = (0..view.n_users())
        .filter(|&u| view.degree(u) == 0 && corrupt.merged.degree(u) > 0)
        .collect();
    let outcome = train(&view, config, None, validation)?;
    Ok((outcome, dropped))
}

/// Retained-set view for downstream evaluation.
pub fn retained_view(corrupt: &CorruptCorpus, report: &ValueReport) -> InteractionCorpus {
    corrupt.merged.with_pairs(report.retained.iter().copied())
}

/// Report file: method/k/threshold header, then one row per interaction
/// with its score, removed flag, and injected flag from the ledger.
pub fn write_value_report(
    report: &ValueReport,
    corrupt: &CorruptCorpus,
    path: &Path,
    meta: &[(String, String)],
) -> Result<()> {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    let _ = writeln!(out, "# method={}", report.method);
    let _ = writeln!(out, "# k_percent={}", report.k_percent);
    let _ = writeln!(out, "# threshold={}", report.threshold);
    out.push_str("# columns: user_key\titem_key\tscore\tremoved\tinjected\n");
    for (u, v) in corrupt.merged.pairs() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            corrupt.merged.user_key(u),
            corrupt.merged.item_key(v),
            report.scores[&(u, v)],
            u8::from(report.removed.contains(&(u, v))),
            u8::from(corrupt.is_injected(u, v)),
        );
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_value_report(corrupt: &CorruptCorpus, path: &Path) -> Result<ValueReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut method = None;
    let mut k_percent = None;
    let mut threshold = None;
    let mut scores = PairScores::new();
    let mut removed = BTreeSet::new();
    let mut retained = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let bad = |message: String| Error::MalformedArtifact {
            path: path.to_path_buf(),
            message: format!("line {}: {message}", idx + 1),
        };
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((key, value)) = rest.split_once('=') {
                match key {
                    "method" => method = Some(value.parse::<PruneMethod>()?),
                    "k_percent" => {
                        k_percent =
                            Some(value.parse::<f64>().map_err(|_| bad("bad k_percent".into()))?)
                    }
                    "threshold" => {
                        let t = if value == "-inf" {
                            f64::NEG_INFINITY
                        } else {
                            value.parse::<f64>().map_err(|_| bad("bad threshold".into()))?
                        };
                        threshold = Some(t);
                    }
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", fields.len())));
        }
        let u = corrupt
            .merged
            .user_id(fields[0])
            .ok_or_else(|| bad(format!("unknown user `{}`", fields[0])))?;
        let v = corrupt
            .merged
            .item_id(fields[1])
            .ok_or_else(|| bad(format!("unknown item `{}`", fields[1])))?;
        let score: f64 = fields[2].parse().map_err(|_| bad("bad score".into()))?;
        scores.insert((u, v), score);
        if fields[3] == "1" {
            removed.insert((u, v));
        } else {
            retained.insert((u, v));
        }
    }
    let missing = |field: &str| Error::MalformedArtifact {
        path: path.to_path_buf(),
        message: format!("missing `{field}` header"),
    };
    Ok(ValueReport {
        method: method.ok_or_else(|| missing("method"))?,
        k_percent: k_percent.ok_or_else(|| missing("k_percent"))?,
        threshold: threshold.ok_or_else(|| missing("threshold"))?,
        scores,
        removed,
        retained,
    })
}
