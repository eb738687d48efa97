//! Typed, multi-language rule registry.
//!
//! A [`Grammar`] binds several concrete languages: every [`Rule`] carries one
//! realizer [`Template`] per language, so a single derivation tree yields
//! aligned surface forms (for example TPTP and English).

mod constraint;
mod file;
mod template;
mod tree;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use constraint::{distinctness, ConstraintContext, ConstraintFn, ConstraintRegistry, DISTINCT};
pub use file::parse_grammar_definition;
pub use template::{fill_slots, has_slot, parse_template, Substitution, Template, Token, SLOT};
pub use tree::{DerivationTree, Expansion};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrammarError {
    #[error("malformed signature `{spec}`: {reason}")]
    MalformedSignature { spec: String, reason: String },
    #[error("substitution without a preceding child reference at byte {offset} in `{template}`")]
    DanglingSubstitution { template: String, offset: usize },
    #[error("rule `{rule}` has no realizer for language `{language}`")]
    MissingRealizer { rule: String, language: String },
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("rule `{rule}` has non-positive weight {weight}")]
    InvalidWeight { rule: String, weight: f64 },
    #[error("template `{template}` of rule `{rule}` refers to child {index} but the rule has arity {arity}")]
    ChildOutOfRange {
        rule: String,
        template: String,
        index: usize,
        arity: usize,
    },
    #[error("unknown constraint `{0}`")]
    UnknownConstraint(String),
    #[error("type `{0}` is used as an input but no rule produces it")]
    NotClosed(String),
    #[error("tree has an unexpanded `{0}` leaf")]
    UnexpandedLeaf(String),
    #[error("line {line}: {message}")]
    Definition { line: usize, message: String },
}

/// Name of a grammar category such as `fact` or `person`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeName(String);

impl TypeName {
    pub fn new(name: impl Into<String>) -> Result<Self, GrammarError> {
        let name = name.into();
        let trimmed = name.trim();
        if trimmed.is_empty() || trimmed.contains(['(', ')', ',']) {
            return Err(GrammarError::MalformedSignature {
                reason: "type names must be nonempty and free of parentheses and commas".into(),
                spec: name,
            });
        }
        Ok(TypeName(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    pub output: TypeName,
    pub inputs: Vec<TypeName>,
}

impl Signature {
    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_terminal(&self) -> bool {
        self.inputs.is_empty()
    }
}

impl fmt::Display for Signature {
    /// Prints runs of repeated inputs with the `name×k` shorthand.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.output)?;
        if self.inputs.is_empty() {
            return Ok(());
        }
        let mut parts = Vec::new();
        let mut i = 0;
        while i < self.inputs.len() {
            let mut j = i;
            while j < self.inputs.len() && self.inputs[j] == self.inputs[i] {
                j += 1;
            }
            let run = j - i;
            if run > 3 {
                parts.push(format!("{}×{}", self.inputs[i], run));
            } else {
                parts.extend((i..j).map(|_| self.inputs[i].to_string()));
            }
            i = j;
        }
        write!(f, "({})", parts.join(","))
    }
}

/// Parses `name` or `name(t1,...,tn)`; an input may use `t×k` (or `t*k`)
/// to repeat a type `k` times.
pub fn parse_signature(spec: &str) -> Result<Signature, GrammarError> {
    let malformed = |reason: &str| GrammarError::MalformedSignature {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let spec_t = spec.trim();
    let Some(open) = spec_t.find('(') else {
        if spec_t.contains(')') {
            return Err(malformed("unbalanced parentheses"));
        }
        return Ok(Signature {
            output: TypeName::new(spec_t)?,
            inputs: Vec::new(),
        });
    };
    if !spec_t.ends_with(')') {
        return Err(malformed("unbalanced parentheses"));
    }
    let body = &spec_t[open + 1..spec_t.len() - 1];
    if body.contains(['(', ')']) {
        return Err(malformed("nested parentheses"));
    }
    let output = TypeName::new(&spec_t[..open]).map_err(|_| malformed("empty output type"))?;
    let mut inputs = Vec::new();
    for part in body.split(',') {
        let part = part.trim();
        let (name, count) = match part.split_once(['×', '*']) {
            Some((name, count)) => {
                let count: usize = count
                    .trim()
                    .parse()
                    .map_err(|_| malformed("repetition count must be a positive integer"))?;
                if count == 0 {
                    return Err(malformed("repetition count must be a positive integer"));
                }
                (name.trim(), count)
            }
            None => (part, 1),
        };
        let ty = TypeName::new(name).map_err(|_| malformed("empty input type"))?;
        inputs.extend(std::iter::repeat_n(ty, count));
    }
    Ok(Signature { output, inputs })
}

/// A typed production with one realizer per language.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub signature: Signature,
    /// Indexed like [`Grammar::languages`].
    pub realizers: Vec<Template>,
    pub weight: f64,
    pub constraints: Vec<String>,
}

impl Rule {
    /// Builds a rule from a signature string and per-language template strings.
    /// A single template is reused for every language.
    pub fn new(signature: &str, templates: &[&str]) -> Result<Rule, GrammarError> {
        let signature = parse_signature(signature)?;
        let realizers = templates
            .iter()
            .map(|t| parse_template(t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Rule {
            signature,
            realizers,
            weight: 1.0,
            constraints: Vec::new(),
        })
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_constraints<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.constraints.extend(ids.into_iter().map(Into::into));
        self
    }

    pub fn output(&self) -> &TypeName {
        &self.signature.output
    }

    pub fn realizer(&self, language: usize) -> &Template {
        &self.realizers[language]
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signature)?;
        for r in &self.realizers {
            write!(f, " | {r}")?;
        }
        Ok(())
    }
}

/// Rule registry keyed by output type.
///
/// Immutable once built; shared across generation workers behind an `Arc`.
#[derive(Clone)]
pub struct Grammar {
    languages: Vec<String>,
    rules: Vec<Arc<Rule>>,
    by_type: HashMap<TypeName, Vec<usize>>,
    default_constraints: Vec<String>,
    constraints: ConstraintRegistry,
}

impl fmt::Debug for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grammar")
            .field("languages", &self.languages)
            .field("rules", &self.rules.len())
            .field("default_constraints", &self.default_constraints)
            .finish()
    }
}

impl Grammar {
    /// New grammar over `languages` with distinctness enabled by default.
    pub fn new<S: AsRef<str>>(languages: &[S]) -> Self {
        Grammar {
            languages: languages.iter().map(|l| l.as_ref().to_string()).collect(),
            rules: Vec::new(),
            by_type: HashMap::new(),
            default_constraints: vec![DISTINCT.to_string()],
            constraints: ConstraintRegistry::with_builtins(),
        }
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn language_index(&self, language: &str) -> Result<usize, GrammarError> {
        self.languages
            .iter()
            .position(|l| l == language)
            .ok_or_else(|| GrammarError::UnknownLanguage(language.to_string()))
    }

    pub fn rules(&self) -> &[Arc<Rule>] {
        &self.rules
    }

    /// Rules producing `ty`, in registration order.
    pub fn producing(&self, ty: &TypeName) -> impl Iterator<Item = &Arc<Rule>> {
        self.by_type.get(ty).into_iter().flatten().map(|&i| &self.rules[i])
    }

    pub fn has_producer(&self, ty: &TypeName) -> bool {
        self.by_type.get(ty).is_some_and(|v| !v.is_empty())
    }

    pub fn default_constraints(&self) -> &[String] {
        &self.default_constraints
    }

    pub fn constraint_registry(&self) -> &ConstraintRegistry {
        &self.constraints
    }

    /// Registers a named constraint function that rules can reference.
    pub fn register_constraint(&mut self, id: &str, f: ConstraintFn) {
        self.constraints.insert(id, f);
    }

    /// Replaces the constraints applied to every rule.
    pub fn set_default_constraints<I, S>(&mut self, ids: I) -> Result<(), GrammarError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        for id in &ids {
            if self.constraints.get(id).is_none() {
                return Err(GrammarError::UnknownConstraint(id.clone()));
            }
        }
        self.default_constraints = ids;
        Ok(())
    }

    /// Adds a rule. A rule with a single realizer reuses it for every language.
    pub fn register(&mut self, mut rule: Rule) -> Result<&mut Self, GrammarError> {
        if !(rule.weight > 0.0 && rule.weight.is_finite()) {
            return Err(GrammarError::InvalidWeight {
                rule: rule.signature.to_string(),
                weight: rule.weight,
            });
        }
        if rule.realizers.len() == 1 && self.languages.len() > 1 {
            let only = rule.realizers[0].clone();
            rule.realizers = vec![only; self.languages.len()];
        }
        if rule.realizers.len() < self.languages.len() {
            return Err(GrammarError::MissingRealizer {
                rule: rule.signature.to_string(),
                language: self.languages[rule.realizers.len()].clone(),
            });
        }
        if rule.realizers.len() > self.languages.len() {
            return Err(GrammarError::UnknownLanguage(format!("#{}", self.languages.len())));
        }
        let arity = rule.signature.arity();
        for template in &rule.realizers {
            if let Some(index) = template.max_child_ref() {
                if index >= arity {
                    return Err(GrammarError::ChildOutOfRange {
                        rule: rule.signature.to_string(),
                        template: template.to_string(),
                        index,
                        arity,
                    });
                }
            }
        }
        for id in &rule.constraints {
            if self.constraints.get(id).is_none() {
                return Err(GrammarError::UnknownConstraint(id.clone()));
            }
        }
        let index = self.rules.len();
        self.by_type
            .entry(rule.signature.output.clone())
            .or_default()
            .push(index);
        self.rules.push(Arc::new(rule));
        Ok(self)
    }

    /// Convenience wrapper around [`Rule::new`] and [`Grammar::register`].
    pub fn add(&mut self, signature: &str, templates: &[&str], weight: f64) -> Result<&mut Self, GrammarError> {
        let rule = Rule::new(signature, templates)?.with_weight(weight);
        self.register(rule)
    }

    /// Checks that every input type has at least one producing rule.
    pub fn check_closed(&self) -> Result<(), GrammarError> {
        for rule in &self.rules {
            for input in &rule.signature.inputs {
                if !self.has_producer(input) {
                    return Err(GrammarError::NotClosed(input.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Copy of the grammar keeping only the rules accepted by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&Rule) -> bool) -> Grammar {
        let mut out = Grammar {
            languages: self.languages.clone(),
            rules: Vec::new(),
            by_type: HashMap::new(),
            default_constraints: self.default_constraints.clone(),
            constraints: self.constraints.clone(),
        };
        for rule in &self.rules {
            if keep(rule) {
                let index = out.rules.len();
                out.by_type
                    .entry(rule.signature.output.clone())
                    .or_default()
                    .push(index);
                out.rules.push(Arc::clone(rule));
            }
        }
        out
    }

    /// Drops rules that can never complete because some input type has no
    /// productive rule left.
    pub fn productive(&self) -> Grammar {
        let mut live: HashSet<&TypeName> = HashSet::new();
        loop {
            let before = live.len();
            for rule in &self.rules {
                if rule.signature.inputs.iter().all(|t| live.contains(t)) {
                    live.insert(&rule.signature.output);
                }
            }
            if live.len() == before {
                break;
            }
        }
        self.filtered(|rule| rule.signature.inputs.iter().all(|t| live.contains(t)))
    }

    /// Serializes the grammar in the definition file format.
    pub fn to_definition(&self) -> String {
        file::write_grammar_definition(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(s: &str) -> TypeName {
        TypeName::new(s).unwrap()
    }

    #[test]
    fn parses_binary_signature() {
        let sig = parse_signature("rule(property,property)").unwrap();
        assert_eq!(sig.output, ty("rule"));
        assert_eq!(sig.inputs, vec![ty("property"), ty("property")]);
    }

    #[test]
    fn parses_terminal_signature() {
        let sig = parse_signature("adj").unwrap();
        assert_eq!(sig.output, ty("adj"));
        assert!(sig.is_terminal());
    }

    #[test]
    fn parses_mixed_signature() {
        let sig = parse_signature("fact(person,property)").unwrap();
        assert_eq!(sig.inputs, vec![ty("person"), ty("property")]);
    }

    #[test]
    fn parses_repetition_shorthand() {
        let sig = parse_signature("premise(rule×16,fact×8)").unwrap();
        assert_eq!(sig.arity(), 24);
        assert_eq!(sig.inputs[15], ty("rule"));
        assert_eq!(sig.inputs[16], ty("fact"));
        assert_eq!(sig.to_string(), "premise(rule×16,fact×8)");
        assert_eq!(parse_signature("p(a*2)").unwrap().arity(), 2);
    }

    #[test]
    fn rejects_malformed_signatures() {
        for bad in ["rule(property", "rule)", "(a)", "rule(a,,b)", "r(a(b))", "", "r(a×0)"] {
            assert!(
                matches!(parse_signature(bad), Err(GrammarError::MalformedSignature { .. })),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn shorthand_terminal_covers_all_languages() {
        let mut g = Grammar::new(&["tptp", "eng"]);
        g.add("person", &["mary"], 1.0).unwrap();
        let rule = g.producing(&ty("person")).next().unwrap();
        assert_eq!(rule.realizers.len(), 2);
        assert_eq!(rule.realizers[0], rule.realizers[1]);
    }

    #[test]
    fn rejects_zero_weight() {
        let mut g = Grammar::new(&["tptp", "eng"]);
        let err = g.add("adj", &["rich"], 0.0).unwrap_err();
        assert!(matches!(err, GrammarError::InvalidWeight { .. }));
    }

    #[test]
    fn rejects_missing_realizer() {
        let mut g = Grammar::new(&["tptp", "eng", "fra"]);
        let err = g.add("fact(person,property)", &["1[?←0]", "0 is 1"], 1.0).unwrap_err();
        assert!(matches!(err, GrammarError::MissingRealizer { ref language, .. } if language == "fra"));
    }

    #[test]
    fn rejects_out_of_range_child() {
        let mut g = Grammar::new(&["tptp", "eng"]);
        let err = g.add("property(adj)", &["0(?)&1(?)", "0"], 1.0).unwrap_err();
        assert!(matches!(err, GrammarError::ChildOutOfRange { index: 1, arity: 1, .. }));
    }

    #[test]
    fn registration_order_is_preserved() {
        let mut g = Grammar::new(&["tptp", "eng"]);
        for name in ["mary", "paul", "fred"] {
            g.add("person", &[name], 1.0).unwrap();
        }
        let names: Vec<String> = g.producing(&ty("person")).map(|r| r.realizers[0].to_string()).collect();
        assert_eq!(names, ["mary", "paul", "fred"]);
    }

    #[test]
    fn closedness_check_finds_missing_producer() {
        let mut g = Grammar::new(&["tptp", "eng"]);
        g.add("fact(person,property)", &["1[?←0]", "0 is 1"], 1.0).unwrap();
        g.add("person", &["mary"], 1.0).unwrap();
        assert_eq!(g.check_closed(), Err(GrammarError::NotClosed("property".into())));
    }
}
