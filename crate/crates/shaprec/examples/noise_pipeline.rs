//! The full loop: inject noise, value interactions, prune, retrain.
//!
//! Plants known-bad interactions in a synthetic corpus, trains on the
//! corrupted data, scores every interaction with the amortized explainer,
//! prunes the bottom slice, retrains, and compares against the random
//! pruning baseline and the clean/corrupt reference models.
//!
//! Run: `cargo run --release -p shaprec --example noise_pipeline`

use shaprec::corpus::{split_corpus, synthetic};
use shaprec::dae::{train, DaeModel, TrainConfig};
use shaprec::evalkit::{evaluate_model, overlap, validation_ndcg, OverlapSide};
use shaprec::noisebench::{inject, NoiseStrategy};
use shaprec::numerics::Rng;
use shaprec::pruner::{prune_by_score, retrain, score_random, PruneMethod};
use shaprec::shapley::{explain_all, train_explainer, ExplainerConfig};

fn ndcg10(table: &shaprec::evalkit::MetricTable) -> f64 {
    table
        .iter()
        .find(|r| r.metric == "ndcg" && r.k == 10)
        .unwrap()
        .value
}

fn main() {
    let seed = 5;
    let corpus = synthetic::block_events_corpus(400, 80, 8, 6, 0.0, seed);
    let split = split_corpus(&corpus, 0.8, 0.1, seed).unwrap();
    let held_out = split.validation.union(&split.test);
    let corrupt = inject(
        &split.train,
        20.0,
        NoiseStrategy::Random,
        &mut Rng::new(seed),
        Some(&held_out),
    )
    .unwrap();
    println!(
        "{} users × {} items; {} clean train interactions + {} injected noise",
        corpus.n_users(),
        corpus.n_items(),
        split.train.total_interactions(),
        corrupt.ledger.injected.len()
    );

    let dae_config = TrainConfig {
        hidden: 32,
        epochs: 40,
        batch_size: 32,
        seed,
        ..TrainConfig::default()
    };
    let ks = [10];
    let clean_scorer = |m: &DaeModel| validation_ndcg(m, &split.train, &split.validation, 10);
    let clean_model = train(&split.train, &dae_config, None, Some(&clean_scorer)).unwrap().model;
    let corrupt_scorer = |m: &DaeModel| validation_ndcg(m, &corrupt.merged, &split.validation, 10);
    let base_model = train(&corrupt.merged, &dae_config, None, Some(&corrupt_scorer)).unwrap().model;

    // one shared candidate pool so all models compare on equal terms
    let corrupt_exclude = corrupt.merged.union(&split.validation);
    let clean_table =
        evaluate_model(&clean_model, &split.train, &corrupt_exclude, &split.test, &ks).unwrap();
    let corrupt_table =
        evaluate_model(&base_model, &corrupt.merged, &corrupt_exclude, &split.test, &ks).unwrap();
    println!("\nclean-trained   ndcg@10 = {:.4}", ndcg10(&clean_table));
    println!("corrupt-trained ndcg@10 = {:.4}", ndcg10(&corrupt_table));

    println!("\ntraining explainer on the corrupt corpus ...");
    let explainer_config = ExplainerConfig {
        hidden: vec![512, 512],
        learning_rate: 0.01,
        epochs: 150,
        batch_size: 32,
        subsets_per_step: 32,
        seed,
    };
    let explainer = train_explainer(&base_model, &corrupt.merged, &explainer_config)
        .unwrap()
        .explainer;
    let values = explain_all(&explainer, &base_model, &corrupt.merged).unwrap();

    let svv_report = prune_by_score(&corrupt, &values, PruneMethod::Svv, 20.0).unwrap();
    let random_scores = score_random(&corrupt, &mut Rng::new(seed).derive(0xBA5E));
    let random_report = prune_by_score(&corrupt, &random_scores, PruneMethod::Random, 20.0).unwrap();

    let expectation =
        100.0 * corrupt.ledger.injected.len() as f64 / corrupt.total_interactions() as f64;
    for (label, report) in [("shapley", &svv_report), ("random", &random_report)] {
        let bottom = overlap(report, &corrupt.ledger, OverlapSide::Bottom, 0.2).unwrap();
        let top = overlap(report, &corrupt.ledger, OverlapSide::Top, 0.2).unwrap();
        println!(
            "{label:>8} pruning: bottom slice {:.1}% noise, top slice {:.1}% noise",
            bottom.percentage, top.percentage
        );
    }
    println!("   (uniform scorer expectation: {expectation:.1}%)");

    println!("\nretraining on each retained set ...");
    for (label, report) in [("shapley", &svv_report), ("random", &random_report)] {
        let view = shaprec::pruner::retained_view(&corrupt, report);
        let scorer = |m: &DaeModel| validation_ndcg(m, &view, &split.validation, 10);
        let (outcome, dropped) = retrain(&corrupt, report, &dae_config, Some(&scorer)).unwrap();
        let table =
            evaluate_model(&outcome.model, &view, &corrupt_exclude, &split.test, &ks).unwrap();
        let removed_noise = report
            .removed
            .iter()
            .filter(|p| corrupt.ledger.injected.contains(p))
            .count();
        println!(
            "{label:>8}-pruned: ndcg@10 = {:.4}  (removed {} pairs, {} of them noise, {} users dropped)",
            ndcg10(&table),
            report.removed.len(),
            removed_noise,
            dropped.len()
        );
    }
}
