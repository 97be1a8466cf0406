//! End-to-end exercise of the `shaprec` binary: flags, exit codes, the
//! staged command flow, and artifact behavior visible from outside.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use shaprec::corpus::synthetic;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shaprec"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shaprec-cli-{tag}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_dataset(dir: &Path) -> PathBuf {
    let events = synthetic::block_events(50, 24, 2, 6, 0.1, 3);
    let mut text = String::new();
    for e in &events {
        text.push_str(&format!("{}\t{}\t1\n", e.user_key, e.item_key));
    }
    let path = dir.join("events.tsv");
    fs::write(&path, text).unwrap();
    path
}

fn write_config(dir: &Path, dataset: &Path) -> PathBuf {
    let text = format!(
        "dataset_path = {}\nout_dir = {}\nmin_user_interactions = 1\nmin_item_interactions = 1\n\
         seed = 5\ndae_hidden = 8\ndae_epochs = 5\ndae_batch_size = 16\n\
         explainer_hidden = 24\nexplainer_epochs = 4\nexplainer_subsets_per_step = 3\n\
         eval_ks = 5,10\nexclusion_buckets = 2\n",
        dataset.display(),
        dir.join("out").display()
    );
    let path = dir.join("config.txt");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn usage_errors_exit_one() {
    let out = bin().arg("prepare").output().unwrap(); // missing --config
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["definitely-not-a-command", "--config", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["prepare", "--config"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for command in ["prepare", "inject", "run-all", "exclusion"] {
        assert!(text.contains(command), "help missing `{command}`");
    }
}

#[test]
fn data_errors_exit_two() {
    let dir = scratch("dataerr");
    // config referencing a dataset that does not exist
    let cfg = dir.join("config.txt");
    fs::write(
        &cfg,
        format!("dataset_path = {}\nout_dir = {}\n", dir.join("nope.tsv").display(), dir.join("out").display()),
    )
    .unwrap();
    let out = bin().args(["prepare", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope.tsv"), "error should name the path: {stderr}");

    // config with a typo'd key
    fs::write(&cfg, "dataset_pth = x\nout_dir = y\n").unwrap();
    let out = bin().args(["prepare", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_prerequisite_names_command() {
    let dir = scratch("prereq");
    let dataset = write_dataset(&dir);
    let config = write_config(&dir, &dataset);
    let out = bin().args(["train-base", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("prepare"),
        "error should tell the user to run prepare first: {stderr}"
    );
}

#[test]
fn staged_flow_and_run_all() {
    let dir = scratch("flow");
    let dataset = write_dataset(&dir);
    let config = write_config(&dir, &dataset);

    for command in ["prepare", "inject", "train-base", "train-explainer", "explain", "prune", "retrain", "evaluate", "overlap"] {
        let out = bin().args([command, "--config"]).arg(&config).output().unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "{command} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = bin()
        .args(["exclusion", "--mode", "cumulative", "--order", "descending", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("out").join("exclusion_cumulative_descending.tsv").exists());

    // run-all on top of the staged artifacts resumes cleanly
    let out = bin().args(["run-all", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("ndcg@10"), "run-all should print metric lines: {stdout}");
}

#[test]
fn seed_override_changes_artifacts() {
    let dir = scratch("seedflag");
    let dataset = write_dataset(&dir);
    let config = write_config(&dir, &dataset);

    let out = bin().args(["prepare", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let manifest_a = fs::read(dir.join("out").join("split_manifest.tsv")).unwrap();

    let out = bin()
        .args(["prepare", "--seed", "99", "--out"])
        .arg(dir.join("out2"))
        .args(["--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let manifest_b = fs::read(dir.join("out2").join("split_manifest.tsv")).unwrap();
    assert_ne!(manifest_a, manifest_b);
}

#[test]
fn input_dataset_is_never_mutated() {
    let dir = scratch("immutable");
    let dataset = write_dataset(&dir);
    let config = write_config(&dir, &dataset);
    let before = fs::read(&dataset).unwrap();
    let out = bin().args(["run-all", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&dataset).unwrap(), before);
}
