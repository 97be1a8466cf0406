//! Amortized Shapley values versus the exact oracle.
//!
//! On a corpus small enough to enumerate every coalition, trains the
//! explainer and compares its one-forward-pass values against exact
//! Shapley values of the same game, per user.
//!
//! Run: `cargo run --release -p shaprec --example amortized_values`

use shaprec::corpus::synthetic;
use shaprec::dae::{train, TrainConfig};
use shaprec::numerics::spearman;
use shaprec::shapley::{
    exact_interaction_values, explain_user, normalized_values, train_explainer, ExplainerConfig,
};

fn main() {
    let corpus = synthetic::block_events_corpus(50, 10, 2, 5, 0.15, 7);
    let dae_config = TrainConfig {
        hidden: 16,
        epochs: 80,
        batch_size: 16,
        seed: 7,
        ..TrainConfig::default()
    };
    println!("training base model on {} users × {} items ...", corpus.n_users(), corpus.n_items());
    let model = train(&corpus, &dae_config, None, None).unwrap().model;

    let explainer_config = ExplainerConfig {
        hidden: vec![128, 128],
        learning_rate: 0.01,
        epochs: 250,
        batch_size: 16,
        subsets_per_step: 32,
        seed: 7,
    };
    println!("training explainer ({} epochs) ...", explainer_config.epochs);
    let outcome = train_explainer(&model, &corpus, &explainer_config).unwrap();
    println!(
        "explainer loss: {:.6} → {:.6}",
        outcome.trace.first().unwrap().mean_loss,
        outcome.trace.last().unwrap().mean_loss
    );

    let mut correlations = Vec::new();
    let mut worst_efficiency_gap: f64 = 0.0;
    for u in 0..corpus.n_users() {
        let r = corpus.user_vector(u).unwrap();
        let amortized = explain_user(&outcome.explainer, &model, &r).unwrap();
        let exact = exact_interaction_values(&model, &r).unwrap();
        let observed: Vec<usize> = corpus.row(u).to_vec();
        let a: Vec<f64> = observed.iter().map(|&v| amortized[v]).collect();
        let e: Vec<f64> = observed.iter().map(|&v| exact[v]).collect();
        correlations.push(spearman(&a, &e));

        let (norm, gap) = normalized_values(&outcome.explainer, &model, &r).unwrap();
        worst_efficiency_gap = worst_efficiency_gap.max((norm.iter().sum::<f64>() - gap).abs());
    }
    let mean: f64 = correlations.iter().sum::<f64>() / correlations.len() as f64;
    println!("\nper-user Spearman(amortized, exact): mean {mean:.3}");
    println!("efficiency identity |Σφ − gap| ≤ {worst_efficiency_gap:.2e} over all users");

    // show one user's values side by side
    let u = 0;
    let r = corpus.user_vector(u).unwrap();
    let amortized = explain_user(&outcome.explainer, &model, &r).unwrap();
    let exact = exact_interaction_values(&model, &r).unwrap();
    println!("\nuser {u} ({} items):", corpus.degree(u));
    println!("  item   amortized      exact");
    for &v in corpus.row(u) {
        println!("  {v:>4}   {:>9.5}   {:>9.5}", amortized[v], exact[v]);
    }
}
