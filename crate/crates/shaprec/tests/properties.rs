//! Property tests for the structural invariants.

use proptest::prelude::*;

use shaprec::corpus::{filter_corpus, split_corpus, RawEvent};
use shaprec::noisebench::{CorruptCorpus, NoiseLedger, NoiseStrategy};
use shaprec::numerics::checkpoint::{read_checkpoint, write_checkpoint, Block, Checkpoint};
use shaprec::numerics::Rng;
use shaprec::pruner::{prune_by_score, PairScores, PruneMethod};
use shaprec::shapley::{normalize_efficient, sample_subset};

fn corpus_strategy() -> impl Strategy<Value = Vec<RawEvent>> {
    // 4..12 users, 4..10 items, random edges with at least one per user
    (4usize..12, 4usize..10, any::<u64>()).prop_map(|(m, n, seed)| {
        let mut rng = Rng::new(seed);
        let mut events = Vec::new();
        for u in 0..m {
            let degree = 1 + rng.below(n - 1);
            for v in rng.choose_k(n, degree) {
                events.push(RawEvent {
                    user_key: format!("u{u}"),
                    item_key: format!("i{v}"),
                    rating: 1.0,
                    timestamp: None,
                });
            }
        }
        events
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_every_user(
        events in corpus_strategy(),
        seed in any::<u64>(),
        train_pct in 50u32..95,
        val_pct in 0u32..40,
    ) {
        let corpus = filter_corpus(&events, 1, 1).unwrap();
        let split = split_corpus(
            &corpus,
            train_pct as f64 / 100.0,
            val_pct as f64 / 100.0,
            seed,
        ).unwrap();
        for u in 0..corpus.n_users() {
            let mut merged: Vec<usize> = split.train.row(u).iter()
                .chain(split.validation.row(u))
                .chain(split.test.row(u))
                .copied()
                .collect();
            let total = merged.len();
            merged.sort_unstable();
            merged.dedup();
            // disjoint (no element dropped by dedup) and complete
            prop_assert_eq!(total, merged.len());
            prop_assert_eq!(merged.as_slice(), corpus.row(u));
            // at least one train interaction per user
            prop_assert!(split.train.degree(u) >= 1);
        }
    }

    #[test]
    fn prune_is_invariant_under_monotone_transforms(
        events in corpus_strategy(),
        seed in any::<u64>(),
        k in 0u32..=100,
        scale in 0.1f64..10.0,
        offset in -5.0f64..5.0,
    ) {
        let corpus = filter_corpus(&events, 1, 1).unwrap();
        let corrupt = CorruptCorpus {
            base: corpus.clone(),
            ledger: NoiseLedger {
                strategy: NoiseStrategy::Random,
                k_percent: 0.0,
                seed: 0,
                injected: Default::default(),
            },
            merged: corpus.clone(),
        };
        let mut rng = Rng::new(seed);
        let scores: PairScores = corrupt.merged.pairs()
            .map(|p| (p, rng.uniform(-1.0, 1.0)))
            .collect();
        // strictly increasing transform: affine then odd-power
        let transformed: PairScores = scores.iter()
            .map(|(&p, &s)| (p, (scale * s + offset).powi(3)))
            .collect();
        let a = prune_by_score(&corrupt, &scores, PruneMethod::Svv, k as f64).unwrap();
        let b = prune_by_score(&corrupt, &transformed, PruneMethod::Svv, k as f64).unwrap();
        prop_assert_eq!(a.retained, b.retained);
        prop_assert_eq!(a.removed, b.removed);
    }

    #[test]
    fn removed_count_depends_only_on_k_and_total(
        events in corpus_strategy(),
        seed in any::<u64>(),
        k in 0u32..=100,
    ) {
        let corpus = filter_corpus(&events, 1, 1).unwrap();
        let corrupt = CorruptCorpus {
            base: corpus.clone(),
            ledger: NoiseLedger {
                strategy: NoiseStrategy::Random,
                k_percent: 0.0,
                seed: 0,
                injected: Default::default(),
            },
            merged: corpus.clone(),
        };
        let mut rng = Rng::new(seed);
        let scores: PairScores = corrupt.merged.pairs()
            .map(|p| (p, rng.uniform(-1.0, 1.0)))
            .collect();
        let report = prune_by_score(&corrupt, &scores, PruneMethod::Svv, k as f64).unwrap();
        let total = corrupt.total_interactions();
        let expected = (k as f64 * total as f64 / 100.0).floor() as usize;
        prop_assert_eq!(report.removed.len(), expected);
    }

    #[test]
    fn sampler_masks_are_never_empty_or_full(n in 2usize..12, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        for _ in 0..50 {
            let s = sample_subset(n, &mut rng).unwrap();
            let size = s.mask.iter().filter(|&&b| b).count();
            prop_assert_eq!(size, s.size);
            prop_assert!(size >= 1 && size < n);
        }
    }

    #[test]
    fn normalization_always_hits_the_gap(
        phi in prop::collection::vec(-10.0f64..10.0, 1..20),
        gap in -10.0f64..10.0,
    ) {
        let out = normalize_efficient(&phi, gap);
        prop_assert!((out.iter().sum::<f64>() - gap).abs() < 1e-9);
    }

    #[test]
    fn checkpoints_round_trip_any_bits(
        values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..40),
        rows in 1usize..5,
    ) {
        let cols = values.len();
        let data: Vec<f64> = (0..rows)
            .flat_map(|r| values.iter().map(move |v| v * (r as f64 + 1.0)))
            .collect();
        let ckpt = Checkpoint {
            header: vec![("kind".into(), "prop".into())],
            blocks: vec![Block {
                name: "m".into(),
                rows,
                cols,
                data: data.clone(),
            }],
        };
        let dir = std::env::temp_dir().join("shaprec-prop-ckpt");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("rt-{rows}-{cols}.ckpt"));
        write_checkpoint(&path, &ckpt).unwrap();
        let back = read_checkpoint(&path).unwrap();
        let loaded = &back.block("m").unwrap().data;
        prop_assert_eq!(loaded.len(), data.len());
        for (a, b) in loaded.iter().zip(&data) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
