//! Constraints specific to the first-order grammars.

use std::collections::BTreeSet;

use crate::grammar::{fill_slots, has_slot, ConstraintContext};
use crate::logic::{parse_fof, Formula};

pub const CONDITIONAL_SCOPE: &str = "conditional_scope";
pub const DISTINCT_SYMBOLS: &str = "distinct_symbols";

/// Rejects a node whose TPTP form puts `=>` or `<=>` under a negation or
/// inside another conditional. An implication that is the direct body of a
/// universal quantifier is the quantifier's restrictor and is exempt.
pub fn conditional_scope(ctx: &ConstraintContext<'_>) -> bool {
    let Some(tptp) = ctx.language("tptp") else { return true };
    let text = ctx.realization(tptp);
    if !text.contains("=>") {
        return true;
    }
    let filled;
    let text = if has_slot(text) {
        filled = fill_slots(text, "c");
        filled.as_str()
    } else {
        text
    };
    match parse_fof(text) {
        Ok(f) => conditional_scope_ok(&f),
        // fragments that are not formulas on their own are judged at their parents
        Err(_) => true,
    }
}

/// True if no conditional of `f` sits under a negation or another conditional.
pub fn conditional_scope_ok(f: &Formula) -> bool {
    fn go(f: &Formula, guarded: bool, restrictor: bool) -> bool {
        match f {
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                let exempt = restrictor && matches!(f, Formula::Implies(..));
                if guarded && !exempt {
                    return false;
                }
                go(a, true, false) && go(b, true, false)
            }
            Formula::Not(x) => go(x, true, false),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().all(|x| go(x, guarded, false)),
            Formula::Xor(a, b) => go(a, guarded, false) && go(b, guarded, false),
            Formula::Forall(_, body) => go(body, guarded, true),
            Formula::Exists(_, body) => go(body, guarded, false),
            _ => true,
        }
    }
    go(f, false, false)
}

/// Children must not share any lowercase identifier in their TPTP forms,
/// so combinations such as `rich` with `~rich` are ruled out.
pub fn distinct_symbols(ctx: &ConstraintContext<'_>) -> bool {
    let Some(tptp) = ctx.language("tptp") else { return true };
    let mut seen = BTreeSet::new();
    for i in 0..ctx.node.children.len() {
        for ident in identifiers(ctx.child_realization(i, tptp)) {
            if !seen.insert(ident) {
                return false;
            }
        }
    }
    true
}

/// Distinct lowercase-initial words, ignoring the `room` domain predicate.
fn identifiers(text: &str) -> BTreeSet<&str> {
    let mut out = BTreeSet::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            if bytes[start].is_ascii_lowercase() && word != "room" {
                out.insert(word);
            }
        } else {
            i += 1;
        }
    }
    out
}
