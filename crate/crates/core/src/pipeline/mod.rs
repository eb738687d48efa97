//! From grammar presets to balanced, split, labeled datasets.

mod cap;
mod classifier;
mod dataset;
mod mine;
mod output;
mod sample;
mod split;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cap::{bucket_of, ComplexityCap, CAP_REFERENCE};
pub use classifier::{
    features, train_classifier, Classifier, ClassifierKind, GbmClassifier, GbmParams, LogisticClassifier,
    FEATURE_NAMES, N_FEATURES,
};
pub use dataset::{
    assemble_dataset, label_problem, problem_id, Dataset, DatasetConfig, Problem, RunReport, MIN_BALANCED_SIZE,
};
pub use mine::mine_hard_neutrals;
pub use output::{read_jsonl, write_dataset, write_jsonl, Languages, ProblemRecord, REPORT_FILE};
pub use sample::{premise_count, sample_problem, sample_vocabulary, Candidate};
pub use split::{assign_splits, split_key, Split, SplitRatios};
pub use validate::{
    scan_statement, validate_dataset, validate_records, ValidationOptions, ValidationReport, Violation,
};

use crate::generator::{GenConfig, GenError};
use crate::logic::LogicError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("sampling gave up on {0}")]
    SamplingExhausted(&'static str),
    #[error("classifier training data lacks the {0} label")]
    DegenerateLabels(&'static str),
    #[error("label balance unreachable: {0}")]
    InsufficientNonNeutrals(String),
    #[error("dataset size {size} is below the minimum {min} needed for balancing")]
    SizeTooSmall { size: usize, min: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stream exhausted after {0} problems without reaching the target")]
    StreamExhausted(u64),
    #[error(transparent)]
    Generation(#[from] GenError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Knobs for drawing one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub min_premises: usize,
    pub max_premises: usize,
    /// Inclusive ranges of per-problem vocabulary sizes.
    pub names: (usize, usize),
    pub adjectives: (usize, usize),
    pub predicates: (usize, usize),
    pub relations: (usize, usize),
    pub room_probability: f64,
    pub premise_retries: usize,
    pub hypothesis_retries: usize,
    #[serde(skip)]
    pub generation: GenConfig,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            min_premises: 1,
            max_premises: 32,
            names: (5, 8),
            adjectives: (4, 7),
            predicates: (6, 10),
            relations: (1, 3),
            room_probability: 0.5,
            premise_retries: 64,
            hypothesis_retries: 200,
            generation: GenConfig::default(),
        }
    }
}
