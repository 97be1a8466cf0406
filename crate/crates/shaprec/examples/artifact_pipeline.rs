//! Config-driven pipeline with on-disk artifacts and resume.
//!
//! Writes a synthetic event log and a config file into a temp directory,
//! runs the full pipeline through the same entry point the `shaprec`
//! binary uses, then runs it again to show every stage being skipped.
//!
//! Run: `cargo run --release -p shaprec --example artifact_pipeline`

use std::fmt::Write as _;
use std::fs;

use shaprec::config::PipelineConfig;
use shaprec::corpus::synthetic;
use shaprec::pipeline;

fn main() {
    let dir = std::env::temp_dir().join("shaprec-artifact-example");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();

    // synthetic event log on disk, exactly as a real ingestion would see it
    let events = synthetic::block_events(200, 50, 2, 10, 0.1, 17);
    let mut log = String::new();
    for e in &events {
        let _ = writeln!(log, "{}\t{}\t1", e.user_key, e.item_key);
    }
    let dataset = dir.join("events.tsv");
    fs::write(&dataset, log).unwrap();

    let config_text = format!(
        "dataset_path = {}\nout_dir = {}\nmin_user_interactions = 1\nmin_item_interactions = 1\n\
         seed = 9\ndae_hidden = 24\ndae_epochs = 25\ndae_batch_size = 32\n\
         explainer_hidden = 64,64\nexplainer_epochs = 25\nexplainer_subsets_per_step = 6\n\
         eval_ks = 5,10\n",
        dataset.display(),
        dir.join("out").display()
    );
    let config_path = dir.join("pipeline.toml");
    fs::write(&config_path, &config_text).unwrap();
    let cfg = PipelineConfig::load(&config_path).unwrap();

    println!("first run (computes everything):");
    let summary = pipeline::run_all(&cfg, &mut |stage| println!("  {stage}")).unwrap();
    println!(
        "\n{} injected, {} removed ({} of the removals were injected noise)",
        summary.injected, summary.removed, summary.noise_in_removed
    );
    println!(
        "bottom-slice noise overlap {:.1}% vs random expectation {:.1}%",
        summary.overlap.bottom.percentage, summary.overlap.random_expectation
    );

    println!("\nartifacts in {}:", cfg.out_dir.display());
    let mut names: Vec<String> = fs::read_dir(&cfg.out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        println!("  {name}");
    }

    println!("\nsecond run (resumes from artifacts, recomputes nothing):");
    pipeline::run_all(&cfg, &mut |stage| println!("  {stage}")).unwrap();
    println!("\nsame seed, same config: every artifact is byte-identical on rerun.");
}
