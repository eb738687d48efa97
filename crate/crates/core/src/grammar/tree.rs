use std::sync::Arc;

use super::{GrammarError, Rule, TypeName};

/// A (possibly partial) tree of rule applications.
#[derive(Debug, Clone, PartialEq)]
pub enum DerivationTree {
    /// Nonterminal waiting to be expanded.
    Leaf(TypeName),
    Node(Expansion),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub rule: Arc<Rule>,
    pub children: Vec<DerivationTree>,
    /// Per-language realizations, filled once the subtree is complete.
    pub realized: Option<Vec<String>>,
}

impl DerivationTree {
    /// Fully expanded tree from a rule and expanded children.
    pub fn node(rule: Arc<Rule>, children: Vec<DerivationTree>) -> DerivationTree {
        DerivationTree::Node(Expansion {
            rule,
            children,
            realized: None,
        })
    }

    pub fn output_type(&self) -> &TypeName {
        match self {
            DerivationTree::Leaf(ty) => ty,
            DerivationTree::Node(e) => e.rule.output(),
        }
    }

    pub fn is_complete(&self) -> bool {
        match self {
            DerivationTree::Leaf(_) => false,
            DerivationTree::Node(e) => e.children.iter().all(DerivationTree::is_complete),
        }
    }

    pub fn as_expansion(&self) -> Option<&Expansion> {
        match self {
            DerivationTree::Node(e) => Some(e),
            DerivationTree::Leaf(_) => None,
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&DerivationTree> {
        let mut node = self;
        for &i in path {
            node = node.as_expansion()?.children.get(i)?;
        }
        Some(node)
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut DerivationTree> {
        let mut node = self;
        for &i in path {
            node = match node {
                DerivationTree::Node(e) => e.children.get_mut(i)?,
                DerivationTree::Leaf(_) => return None,
            };
        }
        Some(node)
    }

    /// Realizes the tree in the language with index `language`, bottom-up.
    /// Cached realizations are reused.
    pub fn realize(&self, language: usize) -> Result<String, GrammarError> {
        match self {
            DerivationTree::Leaf(ty) => Err(GrammarError::UnexpandedLeaf(ty.to_string())),
            DerivationTree::Node(e) => {
                if let Some(cache) = &e.realized {
                    return Ok(cache[language].clone());
                }
                let children = e
                    .children
                    .iter()
                    .map(|c| c.realize(language))
                    .collect::<Result<Vec<_>, _>>()?;
                let refs: Vec<&str> = children.iter().map(String::as_str).collect();
                Ok(e.rule.realizer(language).apply(&refs))
            }
        }
    }

    /// Fills the realization cache of this node and all of its descendants.
    pub fn fill_cache(&mut self, languages: usize) -> Result<(), GrammarError> {
        match self {
            DerivationTree::Leaf(ty) => Err(GrammarError::UnexpandedLeaf(ty.to_string())),
            DerivationTree::Node(e) => {
                if e.realized.is_some() {
                    return Ok(());
                }
                for child in &mut e.children {
                    child.fill_cache(languages)?;
                }
                let mut out = Vec::with_capacity(languages);
                for lang in 0..languages {
                    let refs: Vec<&str> = e
                        .children
                        .iter()
                        .map(|c| match c {
                            DerivationTree::Node(ce) => ce.realized.as_ref().unwrap()[lang].as_str(),
                            DerivationTree::Leaf(_) => unreachable!(),
                        })
                        .collect();
                    out.push(e.rule.realizer(lang).apply(&refs));
                }
                e.realized = Some(out);
                Ok(())
            }
        }
    }

    /// Number of expanded nodes.
    pub fn size(&self) -> usize {
        match self {
            DerivationTree::Leaf(_) => 0,
            DerivationTree::Node(e) => 1 + e.children.iter().map(DerivationTree::size).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DerivationTree::Leaf(_) => 0,
            DerivationTree::Node(e) => 1 + e.children.iter().map(DerivationTree::depth).max().unwrap_or(0),
        }
    }

    /// Visits every expanded node with its path, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&[usize], &'a Expansion)) {
        fn go<'a>(t: &'a DerivationTree, path: &mut Vec<usize>, f: &mut impl FnMut(&[usize], &'a Expansion)) {
            if let DerivationTree::Node(e) = t {
                f(path, e);
                for (i, c) in e.children.iter().enumerate() {
                    path.push(i);
                    go(c, path, f);
                    path.pop();
                }
            }
        }
        go(self, &mut Vec::new(), f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Rule;

    fn terminal(sig: &str, text: &str) -> DerivationTree {
        DerivationTree::node(Arc::new(Rule::new(sig, &[text, text]).unwrap()), vec![])
    }

    #[test]
    fn realizes_fact_with_substitution() {
        let property = DerivationTree::node(
            Arc::new(Rule::new("property(adj)", &["0(?)", "0"]).unwrap()),
            vec![terminal("adj", "old")],
        );
        let fact = DerivationTree::node(
            Arc::new(Rule::new("fact(person,property)", &["1[?←0]", "0 is 1"]).unwrap()),
            vec![terminal("person", "mary"), property],
        );
        assert_eq!(fact.realize(0).unwrap(), "old(mary)");
        assert_eq!(fact.realize(1).unwrap(), "mary is old");
    }

    #[test]
    fn realizes_universal_over_conjunction() {
        let conj = DerivationTree::node(
            Arc::new(Rule::new("property(adj,adj)", &["(0(?)&1(?))", "both 0 and 1"]).unwrap()),
            vec![terminal("adj", "rich"), terminal("adj", "quiet")],
        );
        let old = DerivationTree::node(
            Arc::new(Rule::new("property(adj)", &["0(?)", "0"]).unwrap()),
            vec![terminal("adj", "old")],
        );
        let mut rule = DerivationTree::node(
            Arc::new(
                Rule::new(
                    "rule(property,property)",
                    &["![X]:(0[?←X]=>1[?←X])", "everyone who is 0 is 1"],
                )
                .unwrap(),
            ),
            vec![conj, old],
        );
        assert_eq!(rule.realize(0).unwrap(), "![X]:((rich(X)&quiet(X))=>old(X))");
        assert_eq!(rule.realize(1).unwrap(), "everyone who is both rich and quiet is old");
        rule.fill_cache(2).unwrap();
        assert_eq!(rule.realize(0).unwrap(), "![X]:((rich(X)&quiet(X))=>old(X))");
    }

    #[test]
    fn unexpanded_leaf_is_an_error() {
        let t = DerivationTree::node(
            Arc::new(Rule::new("property(adj)", &["0(?)", "0"]).unwrap()),
            vec![DerivationTree::Leaf(TypeName::new("adj").unwrap())],
        );
        assert_eq!(t.realize(0), Err(GrammarError::UnexpandedLeaf("adj".into())));
        assert!(!t.is_complete());
    }
}
