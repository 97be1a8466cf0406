//! Thin command-line front end over the pipeline stages.

use std::path::PathBuf;
use std::process::ExitCode;

use shaprec::config::PipelineConfig;
use shaprec::evalkit::{ExclusionMode, ExclusionOrder, MetricTable};
use shaprec::pipeline;

const USAGE: &str = "\
shaprec — Shapley-value interaction valuation and data pruning

USAGE:
    shaprec <COMMAND> --config <FILE> [--seed <N>] [--out <DIR>] [OPTIONS]

COMMANDS:
    prepare          filter the dataset, split it, write index maps + manifest
    inject           plant simulated noise into the training split
    train-base       train the base model on the corrupt training set
    train-explainer  fit the amortized Shapley explainer
    explain          export per-interaction Shapley values
    prune            rank interactions and drop the bottom k%
    retrain          retrain from scratch on the retained set
    evaluate         metric tables for clean/corrupt/pruned models
    overlap          compare the score ranking against the noise ledger
    exclusion        retrain-and-evaluate sweep over ranked buckets
                     (--mode segmented|cumulative, --order ascending|descending)
    run-all          the whole chain, resuming from existing artifacts

GLOBAL FLAGS:
    --config <FILE>  pipeline config (required)
    --seed <N>       override the config seed
    --out <DIR>      override the config output directory

EXIT CODES:
    0 success, 1 usage error, 2 data error, 3 numeric failure
";

struct Args {
    command: String,
    config: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    mode: ExclusionMode,
    order: ExclusionOrder,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut command = None;
    let mut config = None;
    let mut seed = None;
    let mut out = None;
    let mut mode = ExclusionMode::Segmented;
    let mut order = ExclusionOrder::Ascending;
    let mut iter = argv.iter();
    while let Some(arg) = iter.next() {
        let mut value_for = |flag: &str| {
            iter.next()
                .cloned()
                .ok_or_else(|| format!("flag {flag} needs a value"))
        };
        match arg.as_str() {
            "--config" => config = Some(PathBuf::from(value_for("--config")?)),
            "--seed" => {
                seed = Some(
                    value_for("--seed")?
                        .parse()
                        .map_err(|_| "--seed expects an unsigned integer".to_string())?,
                )
            }
            "--out" => out = Some(PathBuf::from(value_for("--out")?)),
            "--mode" => mode = value_for("--mode")?.parse().map_err(|e| format!("{e}"))?,
            "--order" => order = value_for("--order")?.parse().map_err(|e| format!("{e}"))?,
            "--help" | "-h" => return Err(String::new()),
            flag if flag.starts_with('-') => return Err(format!("unknown flag `{flag}`")),
            cmd => {
                if command.is_some() {
                    return Err(format!("unexpected argument `{cmd}`"));
                }
                command = Some(cmd.to_string());
            }
        }
    }
    Ok(Args {
        command: command.ok_or_else(|| "missing command".to_string())?,
        config: config.ok_or_else(|| "missing --config".to_string())?,
        seed,
        out,
        mode,
        order,
    })
}

fn print_metrics(label: &str, table: &MetricTable) {
    println!("{label}:");
    for row in table {
        println!("  {}@{} = {:.6}  ({} users)", row.metric, row.k, row.value, row.users);
    }
}

fn run(args: &Args) -> shaprec::Result<()> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| shaprec::Error::io(&cfg.out_dir, e))?;

    match args.command.as_str() {
        "prepare" => {
            let split = pipeline::cmd_prepare(&cfg)?;
            println!(
                "prepared: {} users, {} items, {} train / {} validation / {} test interactions",
                split.train.n_users(),
                split.train.n_items(),
                split.train.total_interactions(),
                split.validation.total_interactions(),
                split.test.total_interactions()
            );
        }
        "inject" => {
            let corrupt = pipeline::cmd_inject(&cfg)?;
            println!(
                "injected {} pairs ({} strategy) into {} training interactions",
                corrupt.ledger.injected.len(),
                corrupt.ledger.strategy,
                corrupt.base.total_interactions()
            );
        }
        "train-base" => {
            pipeline::cmd_train_base(&cfg)?;
            println!("base model written to {}", cfg.out_dir.join(pipeline::BASE_MODEL).display());
        }
        "train-explainer" => {
            pipeline::cmd_train_explainer(&cfg)?;
            println!("explainer written to {}", cfg.out_dir.join(pipeline::EXPLAINER).display());
        }
        "explain" => {
            let values = pipeline::cmd_explain(&cfg)?;
            println!(
                "exported {} interaction values to {}",
                values.len(),
                cfg.out_dir.join(pipeline::VALUES).display()
            );
        }
        "prune" => {
            let report = pipeline::cmd_prune(&cfg)?;
            println!(
                "pruned {} of {} interactions (threshold {})",
                report.removed.len(),
                report.removed.len() + report.retained.len(),
                report.threshold
            );
        }
        "retrain" => {
            pipeline::cmd_retrain(&cfg)?;
            println!(
                "pruned model written to {}",
                cfg.out_dir.join(pipeline::PRUNED_MODEL).display()
            );
        }
        "evaluate" => {
            let eval = pipeline::cmd_evaluate(&cfg)?;
            print_metrics("clean-trained", &eval.clean);
            print_metrics("corrupt-trained", &eval.corrupt);
            print_metrics("pruned-retrained", &eval.pruned);
        }
        "overlap" => {
            let o = pipeline::cmd_overlap(&cfg)?;
            println!(
                "top slice: {:.2}% noise, bottom slice: {:.2}% noise (random expectation {:.2}%)",
                o.top.percentage, o.bottom.percentage, o.random_expectation
            );
        }
        "exclusion" => {
            let curve = pipeline::cmd_exclusion(&cfg, args.mode, args.order)?;
            println!("point\tfraction_removed\trecall@10\tndcg@10\tmean_value");
            for p in &curve.points {
                println!(
                    "{}\t{:.4}\t{:.6}\t{:.6}\t{:.6}",
                    p.index, p.fraction_removed, p.recall10, p.ndcg10, p.mean_value
                );
            }
        }
        "run-all" => {
            let summary = pipeline::run_all(&cfg, &mut |stage| eprintln!("[shaprec] {stage}"))?;
            println!(
                "corpus: {} users × {} items; injected {}; removed {} ({} were noise)",
                summary.n_users,
                summary.n_items,
                summary.injected,
                summary.removed,
                summary.noise_in_removed
            );
            print_metrics("clean-trained", &summary.evaluation.clean);
            print_metrics("corrupt-trained", &summary.evaluation.corrupt);
            print_metrics("pruned-retrained", &summary.evaluation.pruned);
            println!(
                "overlap: top {:.2}%, bottom {:.2}% (random expectation {:.2}%)",
                summary.overlap.top.percentage,
                summary.overlap.bottom.percentage,
                summary.overlap.random_expectation
            );
        }
        other => {
            return Err(shaprec::Error::Config(format!("unknown command `{other}`")));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(args) => args,
        Err(msg) => {
            if msg.is_empty() {
                print!("{USAGE}");
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {msg}\n\n{USAGE}");
            return ExitCode::from(1);
        }
    };
    const COMMANDS: &[&str] = &[
        "prepare",
        "inject",
        "train-base",
        "train-explainer",
        "explain",
        "prune",
        "retrain",
        "evaluate",
        "overlap",
        "exclusion",
        "run-all",
    ];
    if !COMMANDS.contains(&args.command.as_str()) {
        eprintln!("error: unknown command `{}`\n\n{USAGE}", args.command);
        return ExitCode::from(1);
    }
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = std::error::Error::source(&e);
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
