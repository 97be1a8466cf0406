//! Interaction corpus: ingestion, filtering, binarization, and splits.
//!
//! Raw events are (user, item[, rating[, timestamp]]) lines. Ratings are
//! binarized away on ingestion: any event means "interacted". The filtered
//! corpus is a sparse binary user–item matrix stored as per-user sorted
//! item-index lists, with bidirectional key↔index maps shared across all
//! views (train/validation/test, corrupt, pruned).

pub mod synthetic;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// One parsed interaction event.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEvent {
    pub user_key: String,
    pub item_key: String,
    /// Ignored after binarization; kept for provenance.
    pub rating: f64,
    /// Optional, used only for deterministic dedup provenance.
    pub timestamp: Option<i64>,
}

/// Input file delimiter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Tsv,
    Csv,
}

impl EventFormat {
    fn delimiter(self) -> char {
        match self {
            EventFormat::Tsv => '\t',
            EventFormat::Csv => ',',
        }
    }
}

impl std::str::FromStr for EventFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(EventFormat::Tsv),
            "csv" => Ok(EventFormat::Csv),
            other => Err(Error::Config(format!(
                "unknown dataset format `{other}` (expected tsv or csv)"
            ))),
        }
    }
}

/// Sparse binary user–item interaction matrix.
///
/// Index maps are shared (`Arc`) so split views and pruned views all live in
/// one index space. Immutable after construction; safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct InteractionCorpus {
    user_keys: Arc<Vec<String>>,
    item_keys: Arc<Vec<String>>,
    user_index: Arc<HashMap<String, usize>>,
    item_index: Arc<HashMap<String, usize>>,
    /// Per-user sorted, deduplicated item indices.
    rows: Vec<Vec<usize>>,
}

impl InteractionCorpus {
    /// Number of users M.
    pub fn n_users(&self) -> usize {
        self.user_keys.len()
    }

    /// Number of items N.
    pub fn n_items(&self) -> usize {
        self.item_keys.len()
    }

    pub fn row(&self, user: usize) -> &[usize] {
        &self.rows[user]
    }

    pub fn degree(&self, user: usize) -> usize {
        self.rows[user].len()
    }

    /// Total interaction count |D+| in this view.
    pub fn total_interactions(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn user_key(&self, user: usize) -> &str {
        &self.user_keys[user]
    }

    pub fn item_key(&self, item: usize) -> &str {
        &self.item_keys[item]
    }

    pub fn user_id(&self, key: &str) -> Option<usize> {
        self.user_index.get(key).copied()
    }

    pub fn item_id(&self, key: &str) -> Option<usize> {
        self.item_index.get(key).copied()
    }

    pub fn contains(&self, user: usize, item: usize) -> bool {
        self.rows[user].binary_search(&item).is_ok()
    }

    /// All (user, item) pairs in ascending order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(u, items)| items.iter().map(move |&v| (u, v)))
    }

    /// Multi-hot vector of length N for one user; entry v is 1 iff the user
    /// interacted with item v in this view.
    pub fn user_vector(&self, user: usize) -> Result<Vec<f64>> {
        if user >= self.n_users() {
            return Err(Error::IndexOutOfRange {
                what: "user",
                index: user,
                bound: self.n_users(),
            });
        }
        let mut v = vec![0.0; self.n_items()];
        for &item in &self.rows[user] {
            v[item] = 1.0;
        }
        Ok(v)
    }

    /// Per-item interaction counts in this view.
    pub fn item_degrees(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_items()];
        for items in &self.rows {
            for &v in items {
                counts[v] += 1;
            }
        }
        counts
    }

    /// New view over the same index space with the given rows.
    pub fn with_rows(&self, mut rows: Vec<Vec<usize>>) -> InteractionCorpus {
        assert_eq!(rows.len(), self.n_users(), "row count must equal M");
        for items in &mut rows {
            items.sort_unstable();
            items.dedup();
            if let Some(&max) = items.last() {
                assert!(max < self.n_items(), "item index out of range");
            }
        }
        InteractionCorpus {
            user_keys: Arc::clone(&self.user_keys),
            item_keys: Arc::clone(&self.item_keys),
            user_index: Arc::clone(&self.user_index),
            item_index: Arc::clone(&self.item_index),
            rows,
        }
    }

    /// New view over the same index space containing exactly `pairs`.
    pub fn with_pairs(&self, pairs: impl IntoIterator<Item = (usize, usize)>) -> InteractionCorpus {
        let mut rows = vec![Vec::new(); self.n_users()];
        for (u, v) in pairs {
            rows[u].push(v);
        }
        self.with_rows(rows)
    }

    /// Per-user union of two views over the same index space.
    pub fn union(&self, other: &InteractionCorpus) -> InteractionCorpus {
        assert_eq!(self.n_users(), other.n_users());
        assert_eq!(self.n_items(), other.n_items());
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut merged = Vec::with_capacity(a.len() + b.len());
                merged.extend_from_slice(a);
                merged.extend_from_slice(b);
                merged.sort_unstable();
                merged.dedup();
                merged
            })
            .collect();
        self.with_rows(rows)
    }
}

/// Train/validation/test views over one shared index space.
#[derive(Debug, Clone)]
pub struct SplitCorpus {
    pub train: InteractionCorpus,
    pub validation: InteractionCorpus,
    pub test: InteractionCorpus,
    pub seed: u64,
}

impl SplitCorpus {
    /// Items to exclude from ranking candidates during test evaluation.
    pub fn train_plus_validation(&self) -> InteractionCorpus {
        self.train.union(&self.validation)
    }
}

/// Parse a delimited event file. Lines must carry at least user and item
/// keys; rating and timestamp fields are optional. Blank lines are skipped;
/// anything else malformed is an error carrying its line number.
pub fn load_events(path: &Path, format: EventFormat) -> Result<Vec<RawEvent>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let delim = format.delimiter();
    let mut events = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delim).collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("expected at least 2 fields, got {}", fields.len()),
            });
        }
        let user_key = fields[0].trim();
        let item_key = fields[1].trim();
        if user_key.is_empty() || item_key.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: "empty user or item key".to_string(),
            });
        }
        let rating = match fields.get(2) {
            Some(raw) if !raw.trim().is_empty() => {
                raw.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: format!("bad rating `{raw}`"),
                })?
            }
            _ => 1.0,
        };
        let timestamp = match fields.get(3) {
            Some(raw) if !raw.trim().is_empty() => {
                Some(raw.trim().parse::<i64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    message: format!("bad timestamp `{raw}`"),
                })?)
            }
            _ => None,
        };
        events.push(RawEvent {
            user_key: user_key.to_string(),
            item_key: item_key.to_string(),
            rating,
            timestamp,
        });
    }
    Ok(events)
}

/// Binarize, deduplicate, and filter events down to a fixed point where
/// every surviving user has ≥ `min_user_interactions` interactions and every
/// surviving item has ≥ `min_item_interactions`.
///
/// Duplicate (user, item) events collapse to a single interaction (the
/// earliest timestamp wins for provenance). Indices are assigned in
/// first-seen event order among surviving keys, so the mapping is stable
/// for a given input file.
pub fn filter_corpus(
    events: &[RawEvent],
    min_user_interactions: usize,
    min_item_interactions: usize,
) -> Result<InteractionCorpus> {
    assert!(
        min_user_interactions >= 1 && min_item_interactions >= 1,
        "thresholds must be >= 1"
    );

    // Dedup on (user, item); binarization makes rating irrelevant.
    let mut first_seen: HashMap<(&str, &str), i64> = HashMap::new();
    for e in events {
        let ts = e.timestamp.unwrap_or(i64::MAX);
        first_seen
            .entry((e.user_key.as_str(), e.item_key.as_str()))
            .and_modify(|t| *t = (*t).min(ts))
            .or_insert(ts);
    }

    let mut alive: Vec<(&str, &str)> = first_seen.keys().copied().collect();
    loop {
        let mut user_deg: HashMap<&str, usize> = HashMap::new();
        let mut item_deg: HashMap<&str, usize> = HashMap::new();
        for &(u, v) in &alive {
            *user_deg.entry(u).or_default() += 1;
            *item_deg.entry(v).or_default() += 1;
        }
        let before = alive.len();
        alive.retain(|&(u, v)| {
            user_deg[u] >= min_user_interactions && item_deg[v] >= min_item_interactions
        });
        if alive.len() == before {
            break;
        }
    }
    if alive.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let surviving: std::collections::HashSet<(&str, &str)> = alive.iter().copied().collect();
    let mut user_keys: Vec<String> = Vec::new();
    let mut item_keys: Vec<String> = Vec::new();
    let mut user_index: HashMap<String, usize> = HashMap::new();
    let mut item_index: HashMap<String, usize> = HashMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(alive.len());
    let mut seen_pair: std::collections::HashSet<(usize, usize)> = Default::default();
    for e in events {
        if !surviving.contains(&(e.user_key.as_str(), e.item_key.as_str())) {
            continue;
        }
        let u = *user_index.entry(e.user_key.clone()).or_insert_with(|| {
            user_keys.push(e.user_key.clone());
            user_keys.len() - 1
        });
        let v = *item_index.entry(e.item_key.clone()).or_insert_with(|| {
            item_keys.push(e.item_key.clone());
            item_keys.len() - 1
        });
        if seen_pair.insert((u, v)) {
            pairs.push((u, v));
        }
    }

    let mut rows = vec![Vec::new(); user_keys.len()];
    for (u, v) in pairs {
        rows[u].push(v);
    }
    for items in &mut rows {
        items.sort_unstable();
    }
    Ok(InteractionCorpus {
        user_keys: Arc::new(user_keys),
        item_keys: Arc::new(item_keys),
        user_index: Arc::new(user_index),
        item_index: Arc::new(item_index),
        rows,
    })
}

/// Per-user uniform random split into train/validation/test.
///
/// For each user: `round((1 − train_ratio) · degree)` items go to test
/// (capped so at least one item stays on the train side), then
/// `round(validation_ratio_of_train · train_side)` of the remaining items
/// move to validation (again keeping at least one train item). Users with
/// degree 1 keep their single interaction in train. Deterministic given
/// the seed.
pub fn split_corpus(
    corpus: &InteractionCorpus,
    train_ratio: f64,
    validation_ratio_of_train: f64,
    seed: u64,
) -> Result<SplitCorpus> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::Config(format!(
            "train_ratio must be in (0, 1), got {train_ratio}"
        )));
    }
    if !(0.0..1.0).contains(&validation_ratio_of_train) {
        return Err(Error::Config(format!(
            "validation_ratio must be in [0, 1), got {validation_ratio_of_train}"
        )));
    }
    // stream id keeps split draws independent of other stages on the same seed
    let mut rng = Rng::new(seed).derive(0x53504c49);
    let mut train_rows = Vec::with_capacity(corpus.n_users());
    let mut val_rows = Vec::with_capacity(corpus.n_users());
    let mut test_rows = Vec::with_capacity(corpus.n_users());
    for u in 0..corpus.n_users() {
        let mut items: Vec<usize> = corpus.row(u).to_vec();
        rng.shuffle(&mut items);
        let degree = items.len();
        let test_size = (((1.0 - train_ratio) * degree as f64).round() as usize).min(degree - 1);
        let train_side = degree - test_size;
        let val_size = ((validation_ratio_of_train * train_side as f64).round() as usize)
            .min(train_side - 1);
        let test: Vec<usize> = items[..test_size].to_vec();
        let validation: Vec<usize> = items[test_size..test_size + val_size].to_vec();
        let train: Vec<usize> = items[test_size + val_size..].to_vec();
        train_rows.push(train);
        val_rows.push(validation);
        test_rows.push(test);
    }
    Ok(SplitCorpus {
        train: corpus.with_rows(train_rows),
        validation: corpus.with_rows(val_rows),
        test: corpus.with_rows(test_rows),
        seed,
    })
}

fn render_meta(meta: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    out
}

fn parse_meta(text: &str) -> HashMap<String, String> {
    let mut meta = HashMap::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.to_string(), v.to_string());
            }
        }
    }
    meta
}

/// Write `user_index.tsv` and `item_index.tsv` (columns: key, index) into
/// `dir`, recording how keys map to matrix indices.
pub fn write_index_maps(corpus: &InteractionCorpus, dir: &Path, meta: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, keys) in [
        ("user_index.tsv", &corpus.user_keys),
        ("item_index.tsv", &corpus.item_keys),
    ] {
        let mut out = render_meta(meta);
        out.push_str("# columns: key\tindex\n");
        for (idx, key) in keys.iter().enumerate() {
            let _ = writeln!(out, "{key}\t{idx}");
        }
        let path = dir.join(name);
        fs::write(&path, out).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Write the split manifest: one row per held-out interaction
/// (columns: user_key, item_index, kind ∈ {validation, test}).
/// Train membership is implied by absence.
pub fn write_split_manifest(split: &SplitCorpus, path: &Path, meta: &[(String, String)]) -> Result<()> {
    let mut out = render_meta(meta);
    let _ = writeln!(out, "# seed={}", split.seed);
    out.push_str("# columns: user_key\titem_index\tkind\n");
    for u in 0..split.validation.n_users() {
        for &v in split.validation.row(u) {
            let _ = writeln!(out, "{}\t{}\tvalidation", split.validation.user_key(u), v);
        }
        for &v in split.test.row(u) {
            let _ = writeln!(out, "{}\t{}\ttest", split.test.user_key(u), v);
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Rebuild a [`SplitCorpus`] from the filtered corpus plus a manifest
/// written by [`write_split_manifest`].
pub fn read_split_manifest(corpus: &InteractionCorpus, path: &Path) -> Result<SplitCorpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let meta = parse_meta(&text);
    let seed: u64 = meta
        .get("seed")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::MalformedArtifact {
            path: path.to_path_buf(),
            message: "missing or invalid seed".to_string(),
        })?;
    let mut val_rows = vec![Vec::new(); corpus.n_users()];
    let mut test_rows = vec![Vec::new(); corpus.n_users()];
    for (idx, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::MalformedArtifact {
            path: path.to_path_buf(),
            message: format!("line {}: {message}", idx + 1),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [user_key, item, kind] = fields.as_slice() else {
            return Err(bad("expected 3 fields".to_string()));
        };
        let u = corpus
            .user_id(user_key)
            .ok_or_else(|| bad(format!("unknown user key `{user_key}`")))?;
        let v: usize = item.parse().map_err(|_| bad(format!("bad item index `{item}`")))?;
        if v >= corpus.n_items() {
            return Err(bad(format!("item index {v} out of range")));
        }
        match *kind {
            "validation" => val_rows[u].push(v),
            "test" => test_rows[u].push(v),
            other => return Err(bad(format!("unknown kind `{other}`"))),
        }
    }
    let validation = corpus.with_rows(val_rows);
    let test = corpus.with_rows(test_rows);
    let train_rows: Vec<Vec<usize>> = (0..corpus.n_users())
        .map(|u| {
            corpus
                .row(u)
                .iter()
                .copied()
                .filter(|v| !validation.contains(u, *v) && !test.contains(u, *v))
                .collect()
        })
        .collect();
    Ok(SplitCorpus {
        train: corpus.with_rows(train_rows),
        validation,
        test,
        seed,
    })
}
