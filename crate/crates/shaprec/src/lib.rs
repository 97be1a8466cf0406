//! Shapley-value interaction valuation and data pruning for
//! implicit-feedback recommenders.
//!
//! The pipeline: train a denoising-autoencoder recommender, value every
//! observed user–item interaction by its Shapley contribution to the
//! model's reconstruction quality (estimated amortized, verified exactly on
//! small games), prune the lowest-valued interactions, and retrain. A
//! built-in noise-injection benchmark plants ground-truth "bad"
//! interactions so the whole loop is verifiable end to end.
//!
//! Start with the runnable examples:
//!
//! ```text
//! cargo run --release -p shaprec --example oracle_axioms      # exact Shapley oracle
//! cargo run --release -p shaprec --example kernel_sampler     # subset-sampling kernel
//! cargo run --release -p shaprec --example train_base_model   # DAE recommender
//! cargo run --release -p shaprec --example amortized_values   # explainer vs exact oracle
//! cargo run --release -p shaprec --example noise_pipeline     # inject → value → prune → retrain
//! cargo run --release -p shaprec --example exclusion_curves   # value-ranked removal sweeps
//! cargo run --release -p shaprec --example artifact_pipeline  # config file, artifacts, resume
//! ```
//!
//! The same capabilities are scriptable through the `shaprec` binary
//! (`prepare`, `inject`, `train-base`, `train-explainer`, `explain`,
//! `prune`, `retrain`, `evaluate`, `overlap`, `exclusion`, `run-all`).

pub mod config;
pub mod corpus;
pub mod dae;
pub mod error;
pub mod evalkit;
pub mod noisebench;
pub mod numerics;
pub mod pipeline;
pub mod pruner;
pub mod shapley;

pub use error::{Error, Result};
