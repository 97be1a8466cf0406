//! Simulated noise injection: the verifiable ground truth.
//!
//! For each user a fraction of extra interactions is fabricated by flipping
//! non-interacted pairs to 1 and recording them in a ledger. Training on
//! the corrupted set, then checking which interactions the valuation ranks
//! lowest against the ledger, turns denoising quality into a measurable
//! quantity.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::InteractionCorpus;
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// How the injected items are chosen from a user's non-interacted pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseStrategy {
    /// Any non-interacted item.
    Random,
    /// Only items in the top-20%-by-popularity band.
    Popular,
    /// Only items in the bottom-20% band.
    Unpopular,
}

impl std::fmt::Display for NoiseStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NoiseStrategy::Random => "random",
            NoiseStrategy::Popular => "popular",
            NoiseStrategy::Unpopular => "unpopular",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for NoiseStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(NoiseStrategy::Random),
            "popular" => Ok(NoiseStrategy::Popular),
            "unpopular" => Ok(NoiseStrategy::Unpopular),
            other => Err(Error::Config(format!("unknown noise strategy `{other}`"))),
        }
    }
}

/// Popularity band of one item in the training view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Popular,
    Middle,
    Unpopular,
}

/// Record of every injected pair plus how they were chosen.
#[derive(Debug, Clone)]
pub struct NoiseLedger {
    pub strategy: NoiseStrategy,
    pub k_percent: f64,
    pub seed: u64,
    pub injected: BTreeSet<(usize, usize)>,
}

/// Clean training view plus its noise-augmented counterpart.
#[derive(Debug, Clone)]
pub struct CorruptCorpus {
    /// The clean training view the noise was injected into.
    pub base: InteractionCorpus,
    pub ledger: NoiseLedger,
    /// `D_corrupt = D+ ∪ D_noise` as a corpus view.
    pub merged: InteractionCorpus,
}

impl CorruptCorpus {
    pub fn is_injected(&self, user: usize, item: usize) -> bool {
        self.ledger.injected.contains(&(user, item))
    }

    pub fn total_interactions(&self) -> usize {
        self.merged.total_interactions()
    }
}

/// Label every item by training popularity: sorted by interaction count
/// descending (ties by item index ascending), the top fifth is `Popular`,
/// the bottom fifth `Unpopular`, the rest `Middle`. Zero-degree items sort
/// last and land in the unpopular band.
pub fn popularity_bands(train: &InteractionCorpus) -> Vec<Band> {
    assert!(train.total_interactions() > 0, "popularity needs a nonempty corpus");
    let counts = train.item_degrees();
    let n = counts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(counts[v]), v));
    let band_size = n / 5;
    let mut bands = vec![Band::Middle; n];
    for &v in &order[..band_size] {
        bands[v] = Band::Popular;
    }
    for &v in &order[n - band_size..] {
        bands[v] = Band::Unpopular;
    }
    bands
}

/// Per-user count the protocol injects: `⌈k% · degree⌉`.
pub fn injection_count(k_percent: f64, degree: usize) -> usize {
    (k_percent * degree as f64 / 100.0).ceil() as usize
}

/// Flip `⌈k%·degree⌉` non-interacted pairs per user to interactions, drawn
/// without replacement from the strategy's eligible pool. Pairs present in
/// `protected` (held-out validation/test interactions) are never selected,
/// so the clean evaluation ground truth stays untouched. Deterministic
/// given the rng seed.
pub fn inject(
    train: &InteractionCorpus,
    k_percent: f64,
    strategy: NoiseStrategy,
    rng: &mut Rng,
    protected: Option<&InteractionCorpus>,
) -> Result<CorruptCorpus> {
    assert!(k_percent >= 0.0);
    let bands = match strategy {
        NoiseStrategy::Random => None,
        _ => Some(popularity_bands(train)),
    };
    let mut injected = BTreeSet::new();
    for u in 0..train.n_users() {
        let degree = train.degree(u);
        let needed = injection_count(k_percent, degree);
        if needed == 0 {
            continue;
        }
        let pool: Vec<usize> = (0..train.n_items())
            .filter(|&v| !train.contains(u, v))
            .filter(|&v| protected.is_none_or(|p| !p.contains(u, v)))
            .filter(|&v| match (&bands, strategy) {
                (Some(b), NoiseStrategy::Popular) => b[v] == Band::Popular,
                (Some(b), NoiseStrategy::Unpopular) => b[v] == Band::Unpopular,
                _ => true,
            })
            .collect();
        if pool.len() < needed {
            return Err(Error::InjectionShortfall {
                user: train.user_key(u).to_string(),
                available: pool.len(),
                needed,
            });
        }
        for idx in rng.choose_k(pool.len(), needed) {
            injected.insert((u, pool[idx]));
        }
    }
    let noise_view = train.with_pairs(injected.iter().copied());
    let merged = train.union(&noise_view);
    Ok(CorruptCorpus {
        base: train.clone(),
        ledger: NoiseLedger {
            strategy,
            k_percent,
            seed: rng.seed(),
            injected,
        },
        merged,
    })
}

/// Ledger file: strategy/k/seed header, then one (user_key, item_key) row
/// per injected pair.
pub fn write_ledger(
    ledger: &NoiseLedger,
    corpus: &InteractionCorpus,
    path: &Path,
    meta: &[(String, String)],
) -> Result<()> {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    let _ = writeln!(out, "# strategy={}", ledger.strategy);
    let _ = writeln!(out, "# k_percent={}", ledger.k_percent);
    let _ = writeln!(out, "# noise_seed={}", ledger.seed);
    out.push_str("# columns: user_key\titem_key\n");
    for &(u, v) in &ledger.injected {
        let _ = writeln!(out, "{}\t{}", corpus.user_key(u), corpus.item_key(v));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_ledger(corpus: &InteractionCorpus, path: &Path) -> Result<NoiseLedger> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut strategy = None;
    let mut k_percent = None;
    let mut seed = None;
    let mut injected = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let bad = |message: String| Error::MalformedArtifact {
            path: path.to_path_buf(),
            message: format!("line {}: {message}", idx + 1),
        };
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((key, value)) = rest.split_once('=') {
                match key {
                    "strategy" => strategy = Some(value.parse::<NoiseStrategy>()?),
                    "k_percent" => {
                        k_percent =
                            Some(value.parse::<f64>().map_err(|_| bad("bad k_percent".into()))?)
                    }
                    "noise_seed" => {
                        seed = Some(value.parse::<u64>().map_err(|_| bad("bad seed".into()))?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (user_key, item_key) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected 2 fields".to_string()))?;
        let u = corpus
            .user_id(user_key)
            .ok_or_else(|| bad(format!("unknown user `{user_key}`")))?;
        let v = corpus
            .item_id(item_key)
            .ok_or_else(|| bad(format!("unknown item `{item_key}`")))?;
        injected.insert((u, v));
    }
    let missing = |field: &str| Error::MalformedArtifact {
        path: path.to_path_buf(),
        message: format!("missing `{field}` header"),
    };
    Ok(NoiseLedger {
        strategy: strategy.ok_or_else(|| missing("strategy"))?,
        k_percent: k_percent.ok_or_else(|| missing("k_percent"))?,
        seed: seed.ok_or_else(|| missing("noise_seed"))?,
        injected,
    })
}

/// Rebuild a [`CorruptCorpus`] from a train view and a loaded ledger.
pub fn corrupt_from_ledger(train: &InteractionCorpus, ledger: NoiseLedger) -> CorruptCorpus {
    let noise_view = train.with_pairs(ledger.injected.iter().copied());
    let merged = train.union(&noise_view);
    CorruptCorpus {
        base: train.clone(),
        ledger,
        merged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic::block_events_corpus;
    use crate::corpus::split_corpus;

    #[test]
    fn injection_count_examples() {
        assert_eq!(injection_count(20.0, 10), 2);
        assert_eq!(injection_count(20.0, 7), 2); // ⌈1.4⌉
        assert_eq!(injection_count(25.0, 4), 1); // exact integer boundary
        assert_eq!(injection_count(20.0, 0), 0);
    }

    #[test]
    fn inject_respects_per_user_count_and_disjointness() {
        let train = block_events_corpus(30, 25, 2, 10, 0.2, 8);
        let mut rng = Rng::new(99);
        let corrupt = inject(&train, 20.0, NoiseStrategy::Random, &mut rng, None).unwrap();
        let mut per_user = vec![0usize; train.n_users()];
        for &(u, v) in &corrupt.ledger.injected {
            assert!(!train.contains(u, v), "injected pair was already observed");
            per_user[u] += 1;
        }
        for u in 0..train.n_users() {
            assert_eq!(per_user[u], injection_count(20.0, train.degree(u)));
        }
        assert_eq!(
            corrupt.total_interactions(),
            train.total_interactions() + corrupt.ledger.injected.len()
        );
    }

    #[test]
    fn inject_is_deterministic() {
        let train = block_events_corpus(15, 20, 2, 6, 0.2, 3);
        let a = inject(&train, 20.0, NoiseStrategy::Random, &mut Rng::new(5), None).unwrap();
        let b = inject(&train, 20.0, NoiseStrategy::Random, &mut Rng::new(5), None).unwrap();
        assert_eq!(a.ledger.injected, b.ledger.injected);
    }

    #[test]
    fn inject_popular_draws_from_popular_band() {
        let train = block_events_corpus(40, 30, 2, 8, 0.3, 12);
        let bands = popularity_bands(&train);
        let mut rng = Rng::new(7);
        let corrupt = inject(&train, 10.0, NoiseStrategy::Popular, &mut rng, None).unwrap();
        for &(_, v) in &corrupt.ledger.injected {
            assert_eq!(bands[v], Band::Popular);
        }
    }

    #[test]
    fn inject_never_touches_protected_splits() {
        let full = block_events_corpus(25, 20, 2, 8, 0.2, 21);
        let split = split_corpus(&full, 0.8, 0.1, 4).unwrap();
        let held_out = split.validation.union(&split.test);
        let mut rng = Rng::new(6);
        let corrupt = inject(&split.train, 20.0, NoiseStrategy::Random, &mut rng, Some(&held_out))
            .unwrap();
        for &(u, v) in &corrupt.ledger.injected {
            assert!(!split.validation.contains(u, v));
            assert!(!split.test.contains(u, v));
        }
    }

    #[test]
    fn inject_shortfall_names_user() {
        // degree 3 of 4 items: needs 1, pool has 1 → ok at k=20; at k=200 needs 6 → shortfall
        let train = block_events_corpus(4, 4, 1, 3, 0.0, 2);
        let mut rng = Rng::new(1);
        match inject(&train, 200.0, NoiseStrategy::Random, &mut rng, None) {
            Err(Error::InjectionShortfall { user, .. }) => assert!(user.starts_with('u')),
            other => panic!("expected shortfall, got {other:?}"),
        }
    }

    #[test]
    fn bands_on_distinct_counts() {
        // 10 items, item v appears in v+1 user rows → distinct counts
        let mut events = Vec::new();
        for v in 0..10usize {
            for u in 0..=v {
                events.push(crate::corpus::RawEvent {
                    user_key: format!("u{u}"),
                    item_key: format!("i{v}"),
                    rating: 1.0,
                    timestamp: None,
                });
            }
        }
        let c = crate::corpus::filter_corpus(&events, 1, 1).unwrap();
        let bands = popularity_bands(&c);
        let popular = bands.iter().filter(|&&b| b == Band::Popular).count();
        let unpopular = bands.iter().filter(|&&b| b == Band::Unpopular).count();
        assert_eq!((popular, unpopular), (2, 2));
        // the two most-interacted items are popular
        let i9 = c.item_id("i9").unwrap();
        let i8 = c.item_id("i8").unwrap();
        assert_eq!(bands[i9], Band::Popular);
        assert_eq!(bands[i8], Band::Popular);
    }

    #[test]
    fn bands_tie_break_by_index() {
        let c = block_events_corpus(10, 10, 1, 5, 0.0, 30);
        // force equal counts by using a complete bipartite sub-block is
        // fiddly; instead check sizes are 2/6/2 regardless of counts
        let bands = popularity_bands(&c);
        assert_eq!(bands.iter().filter(|&&b| b == Band::Popular).count(), 2);
        assert_eq!(bands.iter().filter(|&&b| b == Band::Unpopular).count(), 2);
    }

    #[test]
    fn zero_degree_items_are_unpopular() {
        // corpus where items 4.. never occur in train rows
        let c = block_events_corpus(10, 10, 1, 3, 0.0, 14);
        let train = c.with_rows(
            (0..c.n_users())
                .map(|u| c.row(u).iter().copied().filter(|&v| v < 4).collect())
                .collect(),
        );
        if train.total_interactions() == 0 {
            return; // degenerate draw; other seeds cover the check
        }
        let bands = popularity_bands(&train);
        let n = bands.len();
        let zero_deg: Vec<usize> = (4..n).collect();
        let unpop: Vec<usize> = zero_deg
            .iter()
            .copied()
            .filter(|&v| bands[v] == Band::Unpopular)
            .collect();
        assert_eq!(unpop.len(), 2.min(zero_deg.len()));
    }

    #[test]
    fn ledger_round_trip() {
        let train = block_events_corpus(12, 15, 2, 5, 0.2, 77);
        let mut rng = Rng::new(123);
        let corrupt = inject(&train, 20.0, NoiseStrategy::Unpopular, &mut rng, None).unwrap();
        let dir = std::env::temp_dir().join("shaprec-noise-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ledger.tsv");
        write_ledger(&corrupt.ledger, &train, &path, &[("config_hash".into(), "x".into())])
            .unwrap();
        let back = read_ledger(&train, &path).unwrap();
        assert_eq!(back.injected, corrupt.ledger.injected);
        assert_eq!(back.strategy, NoiseStrategy::Unpopular);
        assert_eq!(back.k_percent, 20.0);
        assert_eq!(back.seed, 123);
        let rebuilt = corrupt_from_ledger(&train, back);
        assert_eq!(rebuilt.total_interactions(), corrupt.total_interactions());
    }
}
