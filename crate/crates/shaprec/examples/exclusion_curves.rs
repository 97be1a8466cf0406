//! Exclusion curves: what removing value-ranked buckets does to accuracy.
//!
//! Ranks the corrupt training interactions by Shapley value, removes
//! buckets either one at a time (segmented) or as growing prefixes
//! (cumulative), retrains at every point, and prints the metric trail.
//!
//! Run: `cargo run --release -p shaprec --example exclusion_curves`

use shaprec::corpus::{split_corpus, synthetic};
use shaprec::dae::{train, DaeModel, TrainConfig};
use shaprec::evalkit::{exclusion_curve, validation_ndcg, ExclusionMode, ExclusionOrder};
use shaprec::noisebench::{inject, NoiseStrategy};
use shaprec::numerics::Rng;
use shaprec::shapley::{explain_all, train_explainer, ExplainerConfig};

fn main() {
    let seed = 3;
    let corpus = synthetic::block_events_corpus(250, 60, 6, 6, 0.0, seed);
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

    let dae_config = TrainConfig {
        hidden: 24,
        epochs: 35,
        batch_size: 32,
        seed,
        ..TrainConfig::default()
    };
    let scorer = |m: &DaeModel| validation_ndcg(m, &corrupt.merged, &split.validation, 10);
    println!("training base model and explainer ...");
    let base = train(&corrupt.merged, &dae_config, None, Some(&scorer)).unwrap().model;
    let explainer_config = ExplainerConfig {
        hidden: vec![512, 512],
        learning_rate: 0.01,
        epochs: 120,
        batch_size: 32,
        subsets_per_step: 32,
        seed,
    };
    let explainer = train_explainer(&base, &corrupt.merged, &explainer_config).unwrap().explainer;
    let values = explain_all(&explainer, &base, &corrupt.merged).unwrap();

    // full-span segmented curve: contrast removing the lowest- vs
    // highest-valued fifth of the data
    for order in [ExclusionOrder::Ascending, ExclusionOrder::Descending] {
        let curve = exclusion_curve(
            &corrupt,
            &split,
            &values,
            ExclusionMode::Segmented,
            order,
            5,
            1.0,
            &dae_config,
            Some(&base),
        )
        .unwrap();
        println!("\nsegmented, {order} by value (each point removes one fifth):");
        println!("  bucket  frac_removed  recall@10  ndcg@10   mean v(1)");
        for p in &curve.points {
            println!(
                "  {:>6}  {:>12.3}  {:>9.4}  {:>7.4}  {:>9.4}",
                p.index, p.fraction_removed, p.recall10, p.ndcg10, p.mean_value
            );
        }
    }

    let curve = exclusion_curve(
        &corrupt,
        &split,
        &values,
        ExclusionMode::Cumulative,
        ExclusionOrder::Ascending,
        5,
        0.5,
        &dae_config,
        Some(&base),
    )
    .unwrap();
    println!("\ncumulative, ascending (growing removal of the bottom half):");
    println!("  point  frac_removed  recall@10  ndcg@10   mean v(1)");
    for p in &curve.points {
        println!(
            "  {:>5}  {:>12.3}  {:>9.4}  {:>7.4}  {:>9.4}",
            p.index, p.fraction_removed, p.recall10, p.ndcg10, p.mean_value
        );
    }
}
