//! Train the denoising-autoencoder recommender on a synthetic corpus.
//!
//! Builds a block-structured interaction corpus, splits it per user,
//! trains with confidence-weighted reconstruction loss, and reports
//! ranking metrics on the held-out test items.
//!
//! Run: `cargo run --release -p shaprec --example train_base_model`

use shaprec::corpus::{split_corpus, synthetic};
use shaprec::dae::{train, DaeModel, TrainConfig};
use shaprec::evalkit::{evaluate_split, validation_ndcg};

fn main() {
    let corpus = synthetic::block_events_corpus(300, 60, 3, 12, 0.1, 42);
    let split = split_corpus(&corpus, 0.8, 0.1, 42).unwrap();
    println!(
        "corpus: {} users × {} items, {} interactions ({} train / {} val / {} test)",
        corpus.n_users(),
        corpus.n_items(),
        corpus.total_interactions(),
        split.train.total_interactions(),
        split.validation.total_interactions(),
        split.test.total_interactions()
    );

    let config = TrainConfig {
        hidden: 32,
        epochs: 60,
        batch_size: 32,
        seed: 42,
        ..TrainConfig::default()
    };
    let scorer = |m: &DaeModel| validation_ndcg(m, &split.train, &split.validation, 10);
    let outcome = train(&split.train, &config, None, Some(&scorer)).unwrap();

    println!("\nepoch loss trace (every 10th):");
    for stat in outcome.trace.iter().step_by(10) {
        println!(
            "  epoch {:>3}: loss {:.4}, validation ndcg@10 {:.4}",
            stat.epoch,
            stat.mean_loss,
            stat.validation_score.unwrap_or(f64::NAN)
        );
    }
    println!("kept epoch {} (best validation ndcg@10)", outcome.best_epoch.unwrap());

    let table = evaluate_split(&outcome.model, &split, &[5, 10, 20]).unwrap();
    println!("\ntest metrics:");
    for row in &table {
        println!("  {}@{} = {:.4}  ({} users)", row.metric, row.k, row.value, row.users);
    }
}
