//! Realizer templates.
//!
//! A template is a string where single digits refer to the rule's children,
//! `?` is a placeholder slot, and `k[?←X]` / `k[?←j]` substitute every slot of
//! child `k` with the literal `X` or with child `j`'s realization. A `?` that
//! is immediately followed by `[` is the TPTP existential quantifier and is
//! kept as literal text.

use std::fmt;

use super::GrammarError;

/// Reserved placeholder token inside realized strings.
pub const SLOT: char = '?';

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Substitution {
    /// Replace every slot with fixed text (typically a variable name).
    Literal(String),
    /// Replace every slot with the realization of another child.
    Child(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Literal(String),
    Slot,
    Child { index: usize, subst: Option<Substitution> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Template {
    Tokens(Vec<Token>),
    /// Wraps every child in `open`/`close` and joins them with `separator`;
    /// used by composite heads with more children than single digits can address.
    Join {
        separator: String,
        open: String,
        close: String,
    },
}

impl Template {
    /// Highest child index referenced by this template, if any.
    pub fn max_child_ref(&self) -> Option<usize> {
        match self {
            Template::Join { .. } => None,
            Template::Tokens(tokens) => tokens
                .iter()
                .filter_map(|t| match t {
                    Token::Child { index, subst } => {
                        let via = match subst {
                            Some(Substitution::Child(k)) => *k,
                            _ => 0,
                        };
                        Some((*index).max(via))
                    }
                    _ => None,
                })
                .max(),
        }
    }

    pub fn is_join(&self) -> bool {
        matches!(self, Template::Join { .. })
    }

    /// Evaluates the template given the realizations of the children.
    pub fn apply(&self, children: &[&str]) -> String {
        match self {
            Template::Join { separator, open, close } => {
                let mut out = String::new();
                for (i, child) in children.iter().enumerate() {
                    if i > 0 {
                        out.push_str(separator);
                    }
                    out.push_str(open);
                    out.push_str(child);
                    out.push_str(close);
                }
                out
            }
            Template::Tokens(tokens) => {
                let mut out = String::new();
                for token in tokens {
                    match token {
                        Token::Literal(text) => out.push_str(text),
                        Token::Slot => out.push(SLOT),
                        Token::Child { index, subst } => {
                            let child = children[*index];
                            match subst {
                                None => out.push_str(child),
                                Some(Substitution::Literal(x)) => out.push_str(&fill_slots(child, x)),
                                Some(Substitution::Child(k)) => out.push_str(&fill_slots(child, children[*k])),
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

/// Returns true if `text` contains a placeholder slot.
pub fn has_slot(text: &str) -> bool {
    slot_positions(text).next().is_some()
}

fn slot_positions(text: &str) -> impl Iterator<Item = usize> + '_ {
    let bytes = text.as_bytes();
    bytes
        .iter()
        .enumerate()
        .filter(move |(i, b)| **b == b'?' && bytes.get(i + 1) != Some(&b'['))
        .map(|(i, _)| i)
}

/// Rewrites every slot of `text` to `with`.
pub fn fill_slots(text: &str, with: &str) -> String {
    let mut out = String::with_capacity(text.len() + with.len());
    let mut last = 0;
    for pos in slot_positions(text) {
        out.push_str(&text[last..pos]);
        out.push_str(with);
        last = pos + 1;
    }
    out.push_str(&text[last..]);
    out
}

/// Parses a template string.
pub fn parse_template(src: &str) -> Result<Template, GrammarError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut literal = String::new();
    let mut i = 0;

    let flush = |literal: &mut String, tokens: &mut Vec<Token>| {
        if !literal.is_empty() {
            tokens.push(Token::Literal(std::mem::take(literal)));
        }
    };

    while i < chars.len() {
        let c = chars[i];
        match c {
            '\\' if i + 1 < chars.len() && is_escapable(chars[i + 1]) => {
                literal.push(chars[i + 1]);
                i += 2;
            }
            '0'..='9' => {
                flush(&mut literal, &mut tokens);
                let index = c.to_digit(10).unwrap() as usize;
                i += 1;
                let subst = match parse_substitution(&chars, i)? {
                    Some((subst, next)) => {
                        i = next;
                        Some(subst)
                    }
                    None => None,
                };
                tokens.push(Token::Child { index, subst });
            }
            '?' if chars.get(i + 1) != Some(&'[') => {
                flush(&mut literal, &mut tokens);
                tokens.push(Token::Slot);
                i += 1;
            }
            '[' if parse_substitution(&chars, i)?.is_some() => {
                return Err(GrammarError::DanglingSubstitution {
                    template: src.to_string(),
                    offset: chars[..i].iter().map(|c| c.len_utf8()).sum(),
                });
            }
            _ => {
                literal.push(c);
                i += 1;
            }
        }
    }
    flush(&mut literal, &mut tokens);
    Ok(Template::Tokens(tokens))
}

fn is_escapable(c: char) -> bool {
    c.is_ascii_digit() || matches!(c, '\\' | '?' | '[')
}

/// Recognizes `[?←X]`, `[?<-X]` or `[?←k]` starting at `start`.
fn parse_substitution(chars: &[char], start: usize) -> Result<Option<(Substitution, usize)>, GrammarError> {
    if chars.get(start) != Some(&'[') || chars.get(start + 1) != Some(&'?') {
        return Ok(None);
    }
    let mut i = start + 2;
    if chars.get(i) == Some(&'←') {
        i += 1;
    } else if chars.get(i) == Some(&'<') && chars.get(i + 1) == Some(&'-') {
        i += 2;
    } else {
        return Ok(None);
    }
    let body_start = i;
    while i < chars.len() && chars[i] != ']' {
        i += 1;
    }
    if i >= chars.len() {
        return Ok(None);
    }
    let body: String = chars[body_start..i].iter().collect();
    if body.is_empty() {
        return Ok(None);
    }
    let subst = if body.chars().all(|c| c.is_ascii_digit()) {
        Substitution::Child(body.parse().expect("digits"))
    } else {
        Substitution::Literal(body)
    };
    Ok(Some((subst, i + 1)))
}

fn escape_literal(text: &str, out: &mut String) {
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let needs = c.is_ascii_digit()
            || c == '\\'
            || (c == '?' && chars.get(i + 1) != Some(&'['))
            || (c == '[' && (i == 0 || chars.get(i + 1) == Some(&'?')));
        if needs {
            out.push('\\');
        }
        out.push(c);
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Template::Join { separator, open, close } => {
                write!(f, "join({}, {}, {})", quote(separator), quote(open), quote(close))
            }
            Template::Tokens(tokens) => {
                let mut out = String::new();
                for token in tokens {
                    match token {
                        Token::Literal(text) => escape_literal(text, &mut out),
                        Token::Slot => out.push('?'),
                        Token::Child { index, subst } => {
                            out.push_str(&index.to_string());
                            match subst {
                                None => {}
                                Some(Substitution::Literal(x)) => out.push_str(&format!("[?←{x}]")),
                                Some(Substitution::Child(k)) => out.push_str(&format!("[?←{k}]")),
                            }
                        }
                    }
                }
                f.write_str(&out)
            }
        }
    }
}

/// Single-quoted form used by the grammar definition format.
pub(crate) fn quote(text: &str) -> String {
    let mut out = String::from("'");
    for c in text.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('\'');
    out
}
