use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cap::{bucket_of, ComplexityCap};
use super::classifier::{features, train_classifier, Classifier, ClassifierKind};
use super::mine::mine_hard_neutrals;
use super::sample::{sample_problem, Candidate};
use super::split::{assign_splits, Split, SplitRatios};
use super::{PipelineError, SamplingConfig};
use crate::fol::GrammarPreset;
use crate::generator::{problem_rng, GenError, Statement};
use crate::logic::{label, Decider, Label, LogicError, Source};

/// Smallest dataset size for which balancing is attempted.
pub const MIN_BALANCED_SIZE: usize = 3000;

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub id: String,
    pub index: u64,
    pub seed: u64,
    pub premises: Vec<Statement>,
    pub hypothesis: Statement,
    pub label: Label,
    pub used_premises: Option<Vec<usize>>,
    pub decided_by: Source,
    pub split: Option<Split>,
}

impl Problem {
    pub fn n_premises(&self) -> usize {
        self.premises.len()
    }

    pub fn features(&self) -> Vec<f64> {
        features(&self.premises, &self.hypothesis)
    }

    pub fn bucket(&self) -> Option<usize> {
        bucket_of(self.label, self.used_premises.as_deref())
    }
}

pub fn problem_id(preset: &GrammarPreset, seed: u64, index: u64) -> String {
    format!("{}-{seed}-{index:08}", preset.id.as_str())
}

/// Labels a candidate; `Ok(None)` when the decider cannot settle it.
pub fn label_problem(
    preset: &GrammarPreset,
    candidate: Candidate,
    seed: u64,
    index: u64,
    decider: &Decider,
) -> Result<Option<Problem>, PipelineError> {
    let premises = candidate.premise_formulas();
    let labeled = match label(&premises, &candidate.hypothesis_formula(), decider) {
        Ok(l) => l,
        Err(LogicError::Undecided | LogicError::InconsistentPremises | LogicError::BoundTooSmall { .. }) => {
            return Ok(None)
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Some(Problem {
        id: problem_id(preset, seed, index),
        index,
        seed,
        premises: candidate.premises,
        hypothesis: candidate.hypothesis,
        label: labeled.label,
        used_premises: labeled.used_premises,
        decided_by: labeled.decided_by,
        split: None,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub size: usize,
    pub seed: u64,
    pub balance: bool,
    pub balance_tolerance: f64,
    pub split: SplitRatios,
    pub workers: usize,
    pub classifier: ClassifierKind,
    /// Post-cap problems consumed to train the classifier.
    pub classifier_examples: usize,
    /// Give up after this many candidates.
    pub max_candidates: u64,
    pub sampling: SamplingConfig,
    #[serde(skip)]
    pub decider: Decider,
}

impl DatasetConfig {
    pub fn new(size: usize, seed: u64) -> DatasetConfig {
        DatasetConfig {
            size,
            seed,
            balance: true,
            balance_tolerance: 0.03,
            split: SplitRatios::default(),
            workers: 1,
            classifier: ClassifierKind::Gbm,
            classifier_examples: 1000,
            max_candidates: (size as u64).saturating_mul(200).max(100_000),
            sampling: SamplingConfig::default(),
            decider: Decider::default(),
        }
    }
}

/// Counters of one run, written next to the dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub candidates: u64,
    pub sampling_failures: u64,
    pub undecided: u64,
    pub labeled: u64,
    pub raw_labels: BTreeMap<Label, u64>,
    pub raw_neutral_fraction: f64,
    /// Non-neutral counts by number of used premises, before the cap.
    pub raw_buckets: BTreeMap<usize, u64>,
    /// Released by the cap.
    pub capped_buckets: BTreeMap<usize, u64>,
    /// Shallow problems still buffered when the stream ended.
    pub cap_discarded: u64,
    pub classifier: Option<ClassifierKind>,
    pub classifier_consumed: u64,
    pub classifier_accuracy: Option<f64>,
    pub majority_baseline: Option<f64>,
    pub heldout_size: u64,
    /// Non-neutrals arriving after their label's quota was filled.
    pub surplus_non_neutral: u64,
    pub mined_neutrals: u64,
    pub trimmed_neutrals: u64,
    pub final_labels: BTreeMap<Label, u64>,
    pub final_buckets: BTreeMap<usize, u64>,
    pub splits: BTreeMap<Split, u64>,
}

#[derive(Debug)]
pub struct Dataset {
    /// Sorted by id.
    pub problems: Vec<Problem>,
    pub report: RunReport,
    pub consumed_ids: Vec<String>,
}

enum Outcome {
    Labeled(Problem),
    Undecided,
    SamplingFailed,
}

fn run_one(preset: &GrammarPreset, cfg: &DatasetConfig, index: u64) -> Result<Outcome, PipelineError> {
    let mut rng = problem_rng(cfg.seed, index);
    let candidate = match sample_problem(preset, &cfg.sampling, &cfg.decider, &mut rng) {
        Ok(c) => c,
        Err(PipelineError::SamplingExhausted(_))
        | Err(PipelineError::Generation(
            GenError::GenerationExhausted(_) | GenError::DepthExceeded(_) | GenError::ResidualSlot(_),
        )) => return Ok(Outcome::SamplingFailed),
        Err(e) => return Err(e),
    };
    Ok(match label_problem(preset, candidate, cfg.seed, index, &cfg.decider)? {
        Some(p) => Outcome::Labeled(p),
        None => Outcome::Undecided,
    })
}

fn label_targets(size: usize) -> [usize; 3] {
    let third = size / 3;
    let r = size % 3;
    [third + usize::from(r > 0), third + usize::from(r > 1), third]
}

/// Sample, label, cap, train, mine, trim, split.
///
/// Candidates are processed in parallel batches but consumed in index order,
/// so the output depends only on the configuration. `progress` sees the
/// report after every batch.
pub fn assemble_dataset(
    preset: &GrammarPreset,
    cfg: &DatasetConfig,
    mut progress: impl FnMut(&RunReport),
) -> Result<Dataset, PipelineError> {
    if cfg.size == 0 {
        return Err(PipelineError::Config("size must be positive".into()));
    }
    if cfg.balance && cfg.size < MIN_BALANCED_SIZE {
        return Err(PipelineError::SizeTooSmall {
            size: cfg.size,
            min: MIN_BALANCED_SIZE,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let batch = (cfg.workers.max(1) * 32) as u64;

    let mut report = RunReport::default();
    let mut cap = ComplexityCap::new();
    let mut training: Vec<Problem> = Vec::new();
    let mut kept: Vec<Problem> = Vec::new();
    let targets = label_targets(cfg.size);
    let mut kept_counts = [0usize; 3];
    let done = |counts: &[usize; 3], kept: &Vec<Problem>| {
        if cfg.balance {
            (0..3).all(|k| counts[k] >= targets[k])
        } else {
            kept.len() >= cfg.size
        }
    };

    let mut next = 0u64;
    while !done(&kept_counts, &kept) {
        if next >= cfg.max_candidates {
            return Err(PipelineError::StreamExhausted(next));
        }
        let end = (next + batch).min(cfg.max_candidates);
        let outcomes: Vec<Result<Outcome, PipelineError>> =
            pool.install(|| (next..end).into_par_iter().map(|i| run_one(preset, cfg, i)).collect());
        next = end;
        for outcome in outcomes {
            report.candidates += 1;
            let problem = match outcome? {
                Outcome::SamplingFailed => {
                    report.sampling_failures += 1;
                    continue;
                }
                Outcome::Undecided => {
                    report.undecided += 1;
                    continue;
                }
                Outcome::Labeled(p) => p,
            };
            report.labeled += 1;
            *report.raw_labels.entry(problem.label).or_default() += 1;
            let bucket = problem.bucket();
            if let Some(b) = bucket {
                *report.raw_buckets.entry(b).or_default() += 1;
            }
            let released = if cfg.balance {
                cap.push(bucket, problem)
            } else {
                vec![problem]
            };
            for p in released {
                if let Some(b) = p.bucket() {
                    *report.capped_buckets.entry(b).or_default() += 1;
                }
                if cfg.balance && training.len() < cfg.classifier_examples {
                    training.push(p);
                    continue;
                }
                let k = p.label.index();
                if cfg.balance && p.label != Label::Neutral && kept_counts[k] >= targets[k] {
                    report.surplus_non_neutral += 1;
                    continue;
                }
                kept_counts[k] += 1;
                kept.push(p);
            }
        }
        let labeled = report.labeled.max(1) as f64;
        report.raw_neutral_fraction = report.raw_labels.get(&Label::Neutral).copied().unwrap_or(0) as f64 / labeled;
        progress(&report);
    }
    report.cap_discarded = cap.finish().len() as u64;
    report.raw_neutral_fraction =
        report.raw_labels.get(&Label::Neutral).copied().unwrap_or(0) as f64 / report.labeled.max(1) as f64;

    let consumed_ids: Vec<String> = training.iter().map(|p| p.id.clone()).collect();
    let mut problems = if cfg.balance {
        let xs: Vec<Vec<f64>> = training.iter().map(Problem::features).collect();
        let ys: Vec<Label> = training.iter().map(|p| p.label).collect();
        let classifier = train_classifier(cfg.classifier, &xs, &ys)?;
        report.classifier = Some(cfg.classifier);
        report.classifier_consumed = training.len() as u64;
        balance(kept, classifier.as_ref(), cfg, &targets, &mut report)?
    } else {
        kept.truncate(cfg.size);
        kept
    };

    problems.sort_by(|a, b| a.id.cmp(&b.id));
    let ids: Vec<&str> = problems.iter().map(|p| p.id.as_str()).collect();
    let splits = assign_splits(&ids, cfg.seed, &cfg.split);
    for (p, s) in problems.iter_mut().zip(splits) {
        p.split = Some(s);
        *report.splits.entry(s).or_default() += 1;
        *report.final_labels.entry(p.label).or_default() += 1;
        if let Some(b) = p.bucket() {
            *report.final_buckets.entry(b).or_default() += 1;
        }
    }
    progress(&report);
    Ok(Dataset {
        problems,
        report,
        consumed_ids,
    })
}

fn balance(
    kept: Vec<Problem>,
    classifier: &dyn Classifier,
    cfg: &DatasetConfig,
    targets: &[usize; 3],
    report: &mut RunReport,
) -> Result<Vec<Problem>, PipelineError> {
    let probs: Vec<[f64; 3]> = kept.iter().map(|p| classifier.predict_proba(&p.features())).collect();
    let labels: Vec<Label> = kept.iter().map(|p| p.label).collect();

    let correct = kept
        .iter()
        .zip(&probs)
        .filter(|(p, q)| argmax(q) == p.label.index())
        .count();
    let mut counts = [0usize; 3];
    for l in &labels {
        counts[l.index()] += 1;
    }
    let n = kept.len().max(1) as f64;
    report.heldout_size = kept.len() as u64;
    report.classifier_accuracy = Some(correct as f64 / n);
    report.majority_baseline = Some(*counts.iter().max().unwrap_or(&0) as f64 / n);

    let nk = Label::Neutral.index();
    let p_neutral: Vec<f64> = probs.iter().map(|q| q[nk]).collect();
    let keep = mine_hard_neutrals(&labels, &p_neutral, cfg.balance_tolerance)?;
    report.mined_neutrals = keep.iter().filter(|k| !**k).count() as u64;

    // keep the hardest remaining neutrals up to the quota
    let mut neutrals: Vec<usize> = (0..kept.len())
        .filter(|&i| keep[i] && labels[i] == Label::Neutral)
        .collect();
    neutrals.sort_by(|&a, &b| p_neutral[a].total_cmp(&p_neutral[b]).then(a.cmp(&b)));
    let mut selected = keep;
    for &i in neutrals.iter().skip(targets[nk]) {
        selected[i] = false;
        report.trimmed_neutrals += 1;
    }
    Ok(kept
        .into_iter()
        .zip(selected)
        .filter(|(_, s)| *s)
        .map(|(p, _)| p)
        .collect())
}

fn argmax(q: &[f64; 3]) -> usize {
    let mut best = 0;
    for k in 1..3 {
        if q[k] > q[best] {
            best = k;
        }
    }
    best
}
