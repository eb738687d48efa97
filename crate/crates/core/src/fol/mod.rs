//! The first-order grammars: lexicon, presets and their constraints.

mod constraints;
mod lexicon;
mod presets;

pub use constraints::{conditional_scope, conditional_scope_ok, distinct_symbols, CONDITIONAL_SCOPE, DISTINCT_SYMBOLS};
pub use lexicon::{is_functor, Gender, Lexicon, LexiconError, Name, Predicate, Relation, DEFAULT_LEXICON};
pub use presets::{
    build_logicnli_grammar, build_unigram_fol_grammar, symmetry_axiom, GrammarPreset, Pool, PresetError, PresetId,
    LOGICNLI_GRAMMAR, NEGATION_WEIGHT, UNIGRAM_FOL_GRAMMAR,
};
