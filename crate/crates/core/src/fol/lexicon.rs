use std::collections::HashSet;

use thiserror::Error;

/// The lexicon shipped with the crate.
pub const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.tsv");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexiconError {
    #[error("lexicon line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("symbol `{0}` is defined twice")]
    DuplicateSymbol(String),
    #[error("lexicon has {found} {what}, at least {needed} are required")]
    TooSmall {
        what: &'static str,
        needed: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Name {
    pub english: String,
    pub symbol: String,
    pub gender: Gender,
}

/// A unary predicate with a hand-written negation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub positive: String,
    pub negated: String,
    pub symbol: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub positive: String,
    pub negated: String,
    pub symbol: String,
    pub symmetric: bool,
}

/// Names, adjectives, verb-phrase predicates and binary relations.
///
/// File format: one tab-separated record per line with the columns
/// `english_positive, english_negated, tptp_symbol, kind, symmetric_flag`.
/// Kinds are `name-f`, `name-m`, `adjective`, `predicate` and `relation`;
/// unused columns hold `-`. Lines starting with `#` are comments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub names: Vec<Name>,
    pub adjectives: Vec<Predicate>,
    pub predicates: Vec<Predicate>,
    pub relations: Vec<Relation>,
}

impl Lexicon {
    pub fn builtin() -> Lexicon {
        Lexicon::parse(DEFAULT_LEXICON).expect("shipped lexicon is valid")
    }

    pub fn parse(text: &str) -> Result<Lexicon, LexiconError> {
        let mut lex = Lexicon::default();
        let mut seen = HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let err = |message: String| LexiconError::Line { line, message };
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            let [positive, negated, symbol, kind, flag] = cols[..] else {
                return Err(err(format!("expected 5 tab-separated columns, found {}", cols.len())));
            };
            if !is_functor(symbol) {
                return Err(err(format!("`{symbol}` is not a valid TPTP functor")));
            }
            if !seen.insert(symbol.to_string()) {
                return Err(LexiconError::DuplicateSymbol(symbol.to_string()));
            }
            let negated_required = || {
                if negated.is_empty() || negated == "-" {
                    Err(err(format!("`{symbol}` has no negated form")))
                } else {
                    Ok(negated.to_string())
                }
            };
            match kind {
                "name-f" | "name-m" => lex.names.push(Name {
                    english: positive.to_string(),
                    symbol: symbol.to_string(),
                    gender: if kind == "name-f" { Gender::Female } else { Gender::Male },
                }),
                "adjective" | "predicate" => {
                    let p = Predicate {
                        positive: positive.to_string(),
                        negated: negated_required()?,
                        symbol: symbol.to_string(),
                    };
                    if kind == "adjective" {
                        lex.adjectives.push(p);
                    } else {
                        lex.predicates.push(p);
                    }
                }
                "relation" => lex.relations.push(Relation {
                    positive: positive.to_string(),
                    negated: negated_required()?,
                    symbol: symbol.to_string(),
                    symmetric: match flag {
                        "1" | "true" | "yes" => true,
                        "0" | "false" | "no" | "-" => false,
                        other => return Err(err(format!("bad symmetric flag `{other}`"))),
                    },
                }),
                other => return Err(err(format!("unknown kind `{other}`"))),
            }
        }
        Ok(lex)
    }

    pub(crate) fn require(&self, names: usize, adjectives: usize) -> Result<(), LexiconError> {
        if self.names.len() < names {
            return Err(LexiconError::TooSmall {
                what: "names",
                needed: names,
                found: self.names.len(),
            });
        }
        if self.adjectives.len() < adjectives {
            return Err(LexiconError::TooSmall {
                what: "adjectives",
                needed: adjectives,
                found: self.adjectives.len(),
            });
        }
        Ok(())
    }
}

/// Lowercase-initial alphanumeric/underscore word.
pub fn is_functor(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}
