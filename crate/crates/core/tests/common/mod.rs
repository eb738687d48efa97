#![allow(dead_code)]

pub mod oracle;

use unigram::fol::{GrammarPreset, Lexicon, PresetId};
use unigram::generator::problem_rng;
use unigram::logic::Decider;
use unigram::pipeline::{sample_problem, Candidate, SamplingConfig};

pub fn preset(id: PresetId) -> GrammarPreset {
    id.build(&Lexicon::builtin()).expect("builtin preset")
}

/// The first `n` candidates that sample successfully from `seed`.
pub fn candidates(preset: &GrammarPreset, seed: u64, n: usize) -> Vec<Candidate> {
    let cfg = SamplingConfig::default();
    let decider = Decider::default();
    (0u64..)
        .filter_map(|i| sample_problem(preset, &cfg, &decider, &mut problem_rng(seed, i)).ok())
        .take(n)
        .collect()
}
