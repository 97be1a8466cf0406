//! Pipeline configuration file.
//!
//! A single plain-text file of `key = value` lines (`#` starts a comment).
//! Unknown or duplicate keys are errors — a typo in a sweep should fail
//! loudly, not silently fall back to a default. All keys:
//!
//! ```text
//! dataset_path            required   path to the event log
//! dataset_format          tsv        tsv | csv
//! out_dir                 required   artifact directory (CLI --out overrides)
//! min_user_interactions   10
//! min_item_interactions   20
//! train_ratio             0.8
//! validation_ratio        0.1        fraction of the train side
//! seed                    0          master seed (CLI --seed overrides)
//! dae_hidden              50
//! dae_corruption_prob     0.5
//! dae_rho                 5
//! dae_lambda              0.001
//! dae_learning_rate       0.001
//! dae_epochs              200
//! dae_batch_size          64
//! noise_strategy          random     random | popular | unpopular
//! noise_k_percent         20
//! noise_seed              seed       defaults to the master seed
//! explainer_hidden        256,256,256
//! explainer_learning_rate 0.001
//! explainer_epochs        100
//! explainer_batch_size    32
//! explainer_subsets_per_step 8
//! prune_method            svv        svv | random | pred | sim
//! prune_k_percent         20
//! eval_ks                 5,10,20
//! exclusion_buckets       5
//! exclusion_span          0.5
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::EventFormat;
use crate::dae::TrainConfig;
use crate::error::{Error, Result};
use crate::noisebench::NoiseStrategy;
use crate::pruner::PruneMethod;
use crate::shapley::ExplainerConfig;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub dataset_path: PathBuf,
    pub dataset_format: EventFormat,
    pub out_dir: PathBuf,
    pub min_user_interactions: usize,
    pub min_item_interactions: usize,
    pub train_ratio: f64,
    pub validation_ratio: f64,
    pub seed: u64,
    pub dae_hidden: usize,
    pub dae_corruption_prob: f64,
    pub dae_rho: f64,
    pub dae_lambda: f64,
    pub dae_learning_rate: f64,
    pub dae_epochs: usize,
    pub dae_batch_size: usize,
    pub noise_strategy: NoiseStrategy,
    pub noise_k_percent: f64,
    pub noise_seed: Option<u64>,
    pub explainer_hidden: Vec<usize>,
    pub explainer_learning_rate: f64,
    pub explainer_epochs: usize,
    pub explainer_batch_size: usize,
    pub explainer_subsets_per_step: usize,
    pub prune_method: PruneMethod,
    pub prune_k_percent: f64,
    pub eval_ks: Vec<usize>,
    pub exclusion_buckets: usize,
    pub exclusion_span: f64,
}

impl PipelineConfig {
    /// Defaults for everything except the two required paths.
    pub fn with_paths(dataset_path: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            dataset_path: dataset_path.into(),
            dataset_format: EventFormat::Tsv,
            out_dir: out_dir.into(),
            min_user_interactions: 10,
            min_item_interactions: 20,
            train_ratio: 0.8,
            validation_ratio: 0.1,
            seed: 0,
            dae_hidden: 50,
            dae_corruption_prob: 0.5,
            dae_rho: 5.0,
            dae_lambda: 0.001,
            dae_learning_rate: 0.001,
            dae_epochs: 200,
            dae_batch_size: 64,
            noise_strategy: NoiseStrategy::Random,
            noise_k_percent: 20.0,
            noise_seed: None,
            explainer_hidden: vec![256, 256, 256],
            explainer_learning_rate: 0.001,
            explainer_epochs: 100,
            explainer_batch_size: 32,
            explainer_subsets_per_step: 8,
            prune_method: PruneMethod::Svv,
            prune_k_percent: 20.0,
            eval_ks: vec![5, 10, 20],
            exclusion_buckets: 5,
            exclusion_span: 0.5,
        }
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<PipelineConfig> {
        let mut dataset_path: Option<PathBuf> = None;
        let mut out_dir: Option<PathBuf> = None;
        let mut cfg = PipelineConfig::with_paths("", "");
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", idx + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("duplicate config key `{key}`")));
            }
            let parse_err =
                |what: &str| Error::Config(format!("key `{key}`: invalid {what} `{value}`"));
            macro_rules! num {
                ($what:literal) => {
                    value.parse().map_err(|_| parse_err($what))?
                };
            }
            match key {
                "dataset_path" => dataset_path = Some(PathBuf::from(value)),
                "dataset_format" => cfg.dataset_format = value.parse()?,
                "out_dir" => out_dir = Some(PathBuf::from(value)),
                "min_user_interactions" => cfg.min_user_interactions = num!("count"),
                "min_item_interactions" => cfg.min_item_interactions = num!("count"),
                "train_ratio" => cfg.train_ratio = num!("fraction"),
                "validation_ratio" => cfg.validation_ratio = num!("fraction"),
                "seed" => cfg.seed = num!("seed"),
                "dae_hidden" => cfg.dae_hidden = num!("count"),
                "dae_corruption_prob" => cfg.dae_corruption_prob = num!("fraction"),
                "dae_rho" => cfg.dae_rho = num!("number"),
                "dae_lambda" => cfg.dae_lambda = num!("number"),
                "dae_learning_rate" => cfg.dae_learning_rate = num!("number"),
                "dae_epochs" => cfg.dae_epochs = num!("count"),
                "dae_batch_size" => cfg.dae_batch_size = num!("count"),
                "noise_strategy" => cfg.noise_strategy = value.parse()?,
                "noise_k_percent" => cfg.noise_k_percent = num!("percent"),
                "noise_seed" => cfg.noise_seed = Some(num!("seed")),
                "explainer_hidden" => cfg.explainer_hidden = parse_list(value, parse_err)?,
                "explainer_learning_rate" => cfg.explainer_learning_rate = num!("number"),
                "explainer_epochs" => cfg.explainer_epochs = num!("count"),
                "explainer_batch_size" => cfg.explainer_batch_size = num!("count"),
                "explainer_subsets_per_step" => cfg.explainer_subsets_per_step = num!("count"),
                "prune_method" => cfg.prune_method = value.parse()?,
                "prune_k_percent" => cfg.prune_k_percent = num!("percent"),
                "eval_ks" => cfg.eval_ks = parse_list(value, parse_err)?,
                "exclusion_buckets" => cfg.exclusion_buckets = num!("count"),
                "exclusion_span" => cfg.exclusion_span = num!("fraction"),
                other => {
                    return Err(Error::Config(format!("unknown config key `{other}`")));
                }
            }
        }
        cfg.dataset_path =
            dataset_path.ok_or_else(|| Error::Config("missing required key `dataset_path`".into()))?;
        cfg.out_dir =
            out_dir.ok_or_else(|| Error::Config("missing required key `out_dir`".into()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check(
            self.train_ratio > 0.0 && self.train_ratio < 1.0,
            "train_ratio must be in (0, 1)",
        )?;
        check(
            (0.0..1.0).contains(&self.validation_ratio),
            "validation_ratio must be in [0, 1)",
        )?;
        check(self.dae_rho > 1.0, "dae_rho must exceed 1")?;
        check(
            (0.0..1.0).contains(&self.dae_corruption_prob),
            "dae_corruption_prob must be in [0, 1)",
        )?;
        check(self.dae_lambda >= 0.0, "dae_lambda must be >= 0")?;
        check(self.dae_epochs >= 1 && self.dae_batch_size >= 1, "dae epochs/batch must be >= 1")?;
        check(
            self.min_user_interactions >= 1 && self.min_item_interactions >= 1,
            "filter thresholds must be >= 1",
        )?;
        check(
            (0.0..=100.0).contains(&self.noise_k_percent)
                && (0.0..=100.0).contains(&self.prune_k_percent),
            "k percentages must be in [0, 100]",
        )?;
        check(!self.explainer_hidden.is_empty(), "explainer_hidden must be nonempty")?;
        check(!self.eval_ks.is_empty(), "eval_ks must be nonempty")?;
        check(self.exclusion_buckets >= 2, "exclusion_buckets must be >= 2")?;
        check(
            self.exclusion_span > 0.0 && self.exclusion_span <= 1.0,
            "exclusion_span must be in (0, 1]",
        )?;
        Ok(())
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise_seed.unwrap_or(self.seed)
    }

    pub fn dae_train_config(&self) -> TrainConfig {
        TrainConfig {
            hidden: self.dae_hidden,
            corruption_prob: self.dae_corruption_prob,
            rho: self.dae_rho,
            lambda: self.dae_lambda,
            learning_rate: self.dae_learning_rate,
            epochs: self.dae_epochs,
            batch_size: self.dae_batch_size,
            seed: self.seed,
        }
    }

    pub fn explainer_config(&self) -> ExplainerConfig {
        ExplainerConfig {
            hidden: self.explainer_hidden.clone(),
            learning_rate: self.explainer_learning_rate,
            epochs: self.explainer_epochs,
            batch_size: self.explainer_batch_size,
            subsets_per_step: self.explainer_subsets_per_step,
            seed: self.seed,
        }
    }

    /// Canonical single-line-per-key rendering of everything that affects
    /// computation (out_dir excluded: the same experiment in a different
    /// directory hashes identically).
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let kv: Vec<(&str, String)> = vec![
            ("dataset_path", self.dataset_path.display().to_string()),
            (
                "dataset_format",
                match self.dataset_format {
                    EventFormat::Tsv => "tsv".into(),
                    EventFormat::Csv => "csv".into(),
                },
            ),
            ("min_user_interactions", self.min_user_interactions.to_string()),
            ("min_item_interactions", self.min_item_interactions.to_string()),
            ("train_ratio", self.train_ratio.to_string()),
            ("validation_ratio", self.validation_ratio.to_string()),
            ("seed", self.seed.to_string()),
            ("dae_hidden", self.dae_hidden.to_string()),
            ("dae_corruption_prob", self.dae_corruption_prob.to_string()),
            ("dae_rho", self.dae_rho.to_string()),
            ("dae_lambda", self.dae_lambda.to_string()),
            ("dae_learning_rate", self.dae_learning_rate.to_string()),
            ("dae_epochs", self.dae_epochs.to_string()),
            ("dae_batch_size", self.dae_batch_size.to_string()),
            ("noise_strategy", self.noise_strategy.to_string()),
            ("noise_k_percent", self.noise_k_percent.to_string()),
            ("noise_seed", self.noise_seed().to_string()),
            (
                "explainer_hidden",
                self.explainer_hidden
                    .iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("explainer_learning_rate", self.explainer_learning_rate.to_string()),
            ("explainer_epochs", self.explainer_epochs.to_string()),
            ("explainer_batch_size", self.explainer_batch_size.to_string()),
            (
                "explainer_subsets_per_step",
                self.explainer_subsets_per_step.to_string(),
            ),
            ("prune_method", self.prune_method.to_string()),
            ("prune_k_percent", self.prune_k_percent.to_string()),
            (
                "eval_ks",
                self.eval_ks
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("exclusion_buckets", self.exclusion_buckets.to_string()),
            ("exclusion_span", self.exclusion_span.to_string()),
        ];
        for (k, v) in kv {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// FNV-1a hash of the canonical rendering, embedded in every artifact.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.canonical_string().bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    /// Header fields every artifact embeds.
    pub fn artifact_meta(&self) -> Vec<(String, String)> {
        vec![
            ("config_hash".to_string(), self.hash()),
            ("seed".to_string(), self.seed.to_string()),
        ]
    }
}

fn parse_list<T: std::str::FromStr>(
    value: &str,
    parse_err: impl Fn(&str) -> Error,
) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|tok| tok.trim().parse().map_err(|_| parse_err("list entry")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "dataset_path = data/events.tsv\nout_dir = runs/a\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = PipelineConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.dae_hidden, 50);
        assert_eq!(cfg.noise_k_percent, 20.0);
        assert_eq!(cfg.explainer_hidden, vec![256, 256, 256]);
        assert_eq!(cfg.eval_ks, vec![5, 10, 20]);
        assert_eq!(cfg.noise_seed(), cfg.seed);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let text = format!("{MINIMAL}dae_hiden = 32\n");
        match PipelineConfig::parse(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("dae_hiden"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_an_error() {
        let text = format!("{MINIMAL}seed = 1\nseed = 2\n");
        assert!(matches!(PipelineConfig::parse(&text), Err(Error::Config(_))));
    }

    #[test]
    fn missing_required_key_is_an_error() {
        assert!(PipelineConfig::parse("out_dir = x\n").is_err());
        assert!(PipelineConfig::parse("dataset_path = x\n").is_err());
    }

    #[test]
    fn comments_and_lists_parse() {
        let text = format!(
            "{MINIMAL}# tuning\nexplainer_hidden = 64, 64\neval_ks = 5,10\nseed = 7 # master\n"
        );
        let cfg = PipelineConfig::parse(&text).unwrap();
        assert_eq!(cfg.explainer_hidden, vec![64, 64]);
        assert_eq!(cfg.eval_ks, vec![5, 10]);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn out_of_range_values_rejected() {
        let text = format!("{MINIMAL}train_ratio = 1.5\n");
        assert!(PipelineConfig::parse(&text).is_err());
        let text = format!("{MINIMAL}dae_rho = 0.5\n");
        assert!(PipelineConfig::parse(&text).is_err());
    }

    #[test]
    fn hash_ignores_out_dir_but_not_seed() {
        let a = PipelineConfig::parse(MINIMAL).unwrap();
        let b = PipelineConfig::parse("dataset_path = data/events.tsv\nout_dir = runs/b\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = PipelineConfig::parse(&format!("{MINIMAL}seed = 9\n")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
