//! Run configuration: flags and environment (via clap), then a TOML file, then defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unigram::fol::PresetId;
use unigram::logic::{Decider, DeciderMode, ProverConfig, DEFAULT_MODEL_BOUND};
use unigram::pipeline::{ClassifierKind, DatasetConfig, Languages, SplitRatios, MIN_BALANCED_SIZE};

use crate::CliError;

/// Settings that may come from a config file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub grammar: Option<String>,
    pub size: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub decider: Option<String>,
    pub prover_cmd: Option<String>,
    pub model_bound: Option<usize>,
    pub split: Option<String>,
    pub balance_tol: Option<f64>,
    pub workers: Option<usize>,
    pub languages: Option<String>,
    pub classifier: Option<String>,
    pub balance: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

/// The effective configuration of a `generate` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grammar: PresetId,
    pub size: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub decider: DeciderMode,
    pub prover_cmd: Option<String>,
    pub model_bound: usize,
    pub split: SplitRatios,
    pub balance_tol: f64,
    pub workers: usize,
    pub languages: Languages,
    pub classifier: ClassifierKind,
    pub balance: bool,
}

fn parse<T: std::str::FromStr<Err = String>>(key: &str, v: Option<String>) -> Result<Option<T>, CliError> {
    v.map(|s| s.parse::<T>().map_err(|e| CliError::config(format!("{key}: {e}"))))
        .transpose()
}

/// Command-line (or environment) values, all optional.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grammar: Option<String>,
    pub size: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub decider: Option<String>,
    pub prover_cmd: Option<String>,
    pub model_bound: Option<usize>,
    pub split: Option<String>,
    pub balance_tol: Option<f64>,
    pub workers: Option<usize>,
    pub languages: Option<String>,
    pub classifier: Option<String>,
    pub no_balance: bool,
}

impl RunConfig {
    pub fn resolve(cli: Overrides, file: FileConfig) -> Result<RunConfig, CliError> {
        let cfg = RunConfig {
            grammar: parse("grammar", cli.grammar.or(file.grammar))?.unwrap_or(PresetId::UnigramFol),
            size: cli.size.or(file.size).unwrap_or(10_000),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            out: cli
                .out
                .or(file.out)
                .ok_or_else(|| CliError::config("an output directory is required (--out)"))?,
            decider: parse("decider", cli.decider.or(file.decider))?.unwrap_or(DeciderMode::Internal),
            prover_cmd: cli.prover_cmd.or(file.prover_cmd).filter(|s| !s.trim().is_empty()),
            model_bound: cli.model_bound.or(file.model_bound).unwrap_or(DEFAULT_MODEL_BOUND),
            split: parse("split", cli.split.or(file.split))?.unwrap_or_default(),
            balance_tol: cli.balance_tol.or(file.balance_tol).unwrap_or(0.03),
            workers: cli.workers.or(file.workers).unwrap_or(1),
            languages: parse("languages", cli.languages.or(file.languages))?.unwrap_or_default(),
            classifier: parse("classifier", cli.classifier.or(file.classifier))?.unwrap_or_default(),
            balance: !cli.no_balance && file.balance.unwrap_or(true),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.size == 0 {
            return Err(CliError::config("size must be positive"));
        }
        if self.model_bound == 0 {
            return Err(CliError::config("model bound must be positive"));
        }
        if self.workers == 0 {
            return Err(CliError::config("workers must be positive"));
        }
        if !(0.0..1.0 / 3.0).contains(&self.balance_tol) {
            return Err(CliError::config("balance tolerance must lie in [0, 1/3)"));
        }
        if self.balance && self.size < MIN_BALANCED_SIZE {
            return Err(CliError::balance(format!(
                "size {} is below the minimum {MIN_BALANCED_SIZE} needed for classifier bootstrap and balancing",
                self.size
            )));
        }
        if self.decider != DeciderMode::Internal && self.prover_cmd.is_none() {
            return Err(CliError::prover(format!(
                "decider `{}` needs a prover command (--prover-cmd or UNIGRAM_PROVER_CMD)",
                decider_name(self.decider)
            )));
        }
        Ok(())
    }

    pub fn decider(&self) -> Decider {
        decider(self.decider, self.model_bound, self.prover_cmd.as_deref())
    }

    pub fn dataset(&self) -> DatasetConfig {
        let mut d = DatasetConfig::new(self.size, self.seed);
        d.balance = self.balance;
        d.balance_tolerance = self.balance_tol;
        d.split = self.split;
        d.workers = self.workers;
        d.classifier = self.classifier;
        d.decider = self.decider();
        d
    }
}

pub fn decider_name(mode: DeciderMode) -> &'static str {
    match mode {
        DeciderMode::Internal => "internal",
        DeciderMode::External => "external",
        DeciderMode::Fallback => "fallback",
    }
}

pub fn decider(mode: DeciderMode, model_bound: usize, prover_cmd: Option<&str>) -> Decider {
    Decider {
        mode,
        model_bound,
        strict: false,
        prover: prover_cmd.map(ProverConfig::new),
    }
}
