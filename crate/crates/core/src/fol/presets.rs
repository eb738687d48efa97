use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::constraints::{conditional_scope, distinct_symbols, CONDITIONAL_SCOPE, DISTINCT_SYMBOLS};
use super::lexicon::{Lexicon, LexiconError, Predicate, Relation};
use crate::grammar::{
    parse_grammar_definition, ConstraintRegistry, Grammar, GrammarError, Rule, Signature, Template, Token, TypeName,
};

pub const LOGICNLI_GRAMMAR: &str = include_str!("../../grammars/unigram-logicnli.grammar");
pub const UNIGRAM_FOL_GRAMMAR: &str = include_str!("../../grammars/unigram-fol.grammar");

/// Names used by the LogicNLI preset, as in the original dataset.
const LOGICNLI_NAMES: usize = 7;
const LOGICNLI_ADJECTIVES: usize = 14;
/// Weight of a negated lexical terminal relative to its positive form.
pub const NEGATION_WEIGHT: f64 = 0.2;

#[derive(Debug, Error)]
pub enum PresetError {
    #[error(transparent)]
    LexiconTooSmall(#[from] LexiconError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PresetId {
    #[serde(rename = "unigram-logicnli")]
    LogicNli,
    #[serde(rename = "unigram-fol")]
    UnigramFol,
}

impl PresetId {
    pub fn as_str(self) -> &'static str {
        match self {
            PresetId::LogicNli => "unigram-logicnli",
            PresetId::UnigramFol => "unigram-fol",
        }
    }

    pub fn build(self, lexicon: &Lexicon) -> Result<GrammarPreset, PresetError> {
        match self {
            PresetId::LogicNli => build_logicnli_grammar(lexicon),
            PresetId::UnigramFol => build_unigram_fol_grammar(lexicon),
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "unigram-logicnli" | "logicnli" => Ok(PresetId::LogicNli),
            "unigram-fol" | "fol" => Ok(PresetId::UnigramFol),
            other => Err(format!(
                "unknown grammar `{other}` (expected unigram-fol or unigram-logicnli)"
            )),
        }
    }
}

/// Which lexical pool a terminal type draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pool {
    Names,
    Adjectives,
    Predicates,
    Relations,
}

/// A ready-to-use grammar with its entry points.
#[derive(Debug, Clone)]
pub struct GrammarPreset {
    pub id: PresetId,
    pub grammar: Grammar,
    /// Whole-problem head.
    pub start: TypeName,
    /// Types sampled as standalone premises, with their relative weights.
    pub sentence_types: Vec<(TypeName, f64)>,
    pub hypothesis_type: TypeName,
    /// Domain declaration placed first in a problem, when supported.
    pub room_type: Option<TypeName>,
    /// Terminal types and the pool each draws its symbols from.
    pub lexical_types: BTreeMap<TypeName, Pool>,
    /// Symmetric relations by symbol.
    pub symmetric: BTreeMap<String, Relation>,
}

impl GrammarPreset {
    /// The TPTP symbol of a lexical terminal rule, without negation.
    pub fn terminal_symbol<'r>(&self, rule: &'r Rule) -> Option<&'r str> {
        if !rule.signature.is_terminal() || !self.lexical_types.contains_key(&rule.signature.output) {
            return None;
        }
        let tptp = self.grammar.language_index("tptp").ok()?;
        match rule.realizer(tptp) {
            Template::Tokens(tokens) => match tokens.as_slice() {
                [Token::Literal(s)] => Some(s.trim_start_matches('~')),
                _ => None,
            },
            Template::Join { .. } => None,
        }
    }

    /// Symbols available to each pool; a symbol belongs to the first pool it
    /// is registered under, so adjectives are not also listed as predicates.
    pub fn pools(&self) -> BTreeMap<Pool, Vec<String>> {
        let mut out: BTreeMap<Pool, Vec<String>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for rule in self.grammar.rules() {
            if let Some(sym) = self.terminal_symbol(rule) {
                let pool = self.lexical_types[&rule.signature.output];
                if seen.insert(sym) {
                    out.entry(pool).or_default().push(sym.to_string());
                }
            }
        }
        out
    }

    /// Copy of the grammar whose lexical terminals are limited to `keep`.
    pub fn restricted(&self, keep: &BTreeSet<String>) -> Grammar {
        self.grammar
            .filtered(|rule| self.terminal_symbol(rule).is_none_or(|s| keep.contains(s)))
            .productive()
    }
}

fn registry() -> ConstraintRegistry {
    let mut r = ConstraintRegistry::with_builtins();
    r.insert(CONDITIONAL_SCOPE, conditional_scope);
    r.insert(DISTINCT_SYMBOLS, distinct_symbols);
    r
}

fn ty(s: &str) -> TypeName {
    TypeName::new(s).expect("static type name")
}

fn literal(s: &str) -> Template {
    Template::Tokens(vec![Token::Literal(s.to_string())])
}

/// Registers a terminal whose surface forms are taken verbatim.
fn terminal(g: &mut Grammar, output: &str, tptp: &str, eng: &str, weight: f64) -> Result<(), GrammarError> {
    let rule = Rule {
        signature: Signature {
            output: ty(output),
            inputs: vec![],
        },
        realizers: vec![literal(tptp), literal(eng)],
        weight,
        constraints: vec![],
    };
    g.register(rule)?;
    Ok(())
}

fn adjective_terminals(g: &mut Grammar, adjectives: &[Predicate]) -> Result<(), GrammarError> {
    for a in adjectives {
        terminal(g, "adj", &a.symbol, &a.positive, 1.0)?;
        terminal(g, "adj", &format!("~{}", a.symbol), &a.negated, NEGATION_WEIGHT)?;
    }
    Ok(())
}

/// The LogicNLI grammar over the first 7 names and 14 adjectives of `lexicon`.
pub fn build_logicnli_grammar(lexicon: &Lexicon) -> Result<GrammarPreset, PresetError> {
    lexicon.require(LOGICNLI_NAMES, LOGICNLI_ADJECTIVES)?;
    let mut g = parse_grammar_definition(LOGICNLI_GRAMMAR, &registry())?;
    adjective_terminals(&mut g, &lexicon.adjectives[..LOGICNLI_ADJECTIVES])?;
    for n in &lexicon.names[..LOGICNLI_NAMES] {
        terminal(&mut g, "person", &n.symbol, &n.symbol, 1.0)?;
    }
    g.check_closed()?;
    Ok(GrammarPreset {
        id: PresetId::LogicNli,
        grammar: g,
        start: ty("premise"),
        // the premise head mixes 16 rules with 8 facts
        sentence_types: vec![(ty("rule"), 2.0), (ty("fact"), 1.0)],
        hypothesis_type: ty("hypothesis"),
        room_type: None,
        lexical_types: [(ty("adj"), Pool::Adjectives), (ty("person"), Pool::Names)].into(),
        symmetric: BTreeMap::new(),
    })
}

/// The extended grammar over the full lexicon.
pub fn build_unigram_fol_grammar(lexicon: &Lexicon) -> Result<GrammarPreset, PresetError> {
    lexicon.require(LOGICNLI_NAMES, 5)?;
    let mut g = parse_grammar_definition(UNIGRAM_FOL_GRAMMAR, &registry())?;
    adjective_terminals(&mut g, &lexicon.adjectives)?;
    for a in &lexicon.adjectives {
        terminal(&mut g, "padj", &a.symbol, &a.positive, 1.0)?;
    }
    for a in &lexicon.adjectives {
        terminal(&mut g, "pred", &a.symbol, &format!("is {}", a.positive), 1.0)?;
        terminal(
            &mut g,
            "pred",
            &format!("~{}", a.symbol),
            &format!("is {}", a.negated),
            NEGATION_WEIGHT,
        )?;
    }
    for p in &lexicon.predicates {
        terminal(&mut g, "pred", &p.symbol, &p.positive, 1.0)?;
        terminal(&mut g, "pred", &format!("~{}", p.symbol), &p.negated, NEGATION_WEIGHT)?;
    }
    for n in &lexicon.names {
        terminal(&mut g, "person", &n.symbol, &n.english, 1.0)?;
    }
    for r in &lexicon.relations {
        terminal(&mut g, "rel", &r.symbol, &r.positive, 1.0)?;
        terminal(&mut g, "rel", &format!("~{}", r.symbol), &r.negated, NEGATION_WEIGHT)?;
    }
    g.check_closed()?;
    let symmetric = lexicon
        .relations
        .iter()
        .filter(|r| r.symmetric)
        .map(|r| (r.symbol.clone(), r.clone()))
        .collect();
    Ok(GrammarPreset {
        id: PresetId::UnigramFol,
        grammar: g,
        start: ty("sentence"),
        sentence_types: vec![(ty("sentence"), 1.0)],
        hypothesis_type: ty("claim"),
        room_type: Some(ty("room")),
        lexical_types: [
            (ty("adj"), Pool::Adjectives),
            (ty("padj"), Pool::Adjectives),
            (ty("pred"), Pool::Predicates),
            (ty("person"), Pool::Names),
            (ty("rel"), Pool::Relations),
        ]
        .into(),
        symmetric,
    })
}

/// Symmetry axiom for a relation, as (TPTP, English).
pub fn symmetry_axiom(r: &Relation) -> (String, String) {
    (
        format!("![X,Y]:({0}(X,Y)=>{0}(Y,X))", r.symbol),
        format!("if someone {0} someone else then the latter {0} the former", r.positive),
    )
}
