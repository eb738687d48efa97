use std::collections::HashMap;
use std::fmt;

use super::{DerivationTree, Expansion, Grammar};

/// Identifier of the default sibling-distinctness constraint.
pub const DISTINCT: &str = "distinct";

/// What a constraint sees: the node under test (children realized), its
/// path, and the whole partial tree built so far.
pub struct ConstraintContext<'a> {
    pub grammar: &'a Grammar,
    pub tree: &'a DerivationTree,
    pub path: &'a [usize],
    pub node: &'a Expansion,
}

impl ConstraintContext<'_> {
    pub fn child_realization(&self, child: usize, language: usize) -> &str {
        match &self.node.children[child] {
            DerivationTree::Node(e) => &e.realized.as_ref().expect("children are realized first")[language],
            DerivationTree::Leaf(_) => "",
        }
    }

    /// Realization of the node itself.
    pub fn realization(&self, language: usize) -> &str {
        &self.node.realized.as_ref().expect("node is realized before checks")[language]
    }

    pub fn language(&self, name: &str) -> Option<usize> {
        self.grammar.languages().iter().position(|l| l == name)
    }
}

pub type ConstraintFn = fn(&ConstraintContext<'_>) -> bool;

#[derive(Clone, Default)]
pub struct ConstraintRegistry {
    fns: HashMap<String, ConstraintFn>,
}

impl fmt::Debug for ConstraintRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<_> = self.fns.keys().collect();
        names.sort();
        f.debug_list().entries(names).finish()
    }
}

impl ConstraintRegistry {
    pub fn with_builtins() -> Self {
        let mut r = ConstraintRegistry::default();
        r.insert(DISTINCT, distinctness);
        r
    }

    pub fn insert(&mut self, id: &str, f: ConstraintFn) {
        self.fns.insert(id.to_string(), f);
    }

    pub fn get(&self, id: &str) -> Option<ConstraintFn> {
        self.fns.get(id).copied()
    }
}

/// Children of the same type must realize differently in every language.
pub fn distinctness(ctx: &ConstraintContext<'_>) -> bool {
    let inputs = &ctx.node.rule.signature.inputs;
    let languages = ctx.grammar.languages().len();
    for i in 0..inputs.len() {
        for j in i + 1..inputs.len() {
            if inputs[i] != inputs[j] {
                continue;
            }
            for lang in 0..languages {
                if ctx.child_realization(i, lang) == ctx.child_realization(j, lang) {
                    return false;
                }
            }
        }
    }
    true
}
