//! Depth-first, leftmost-nonterminal random expansion of derivation trees.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grammar::{has_slot, ConstraintContext, DerivationTree, Grammar, GrammarError, Rule, TypeName};
use crate::logic::{operator_counts, parse_fof, Formula, OperatorCounts, SyntaxError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("no rule produces type `{0}`")]
    NoProducingRule(String),
    #[error("generation gave up after {0} backtracks")]
    GenerationExhausted(usize),
    #[error("derivation exceeded the maximum depth {0}")]
    DepthExceeded(usize),
    #[error("realization still contains a `?` slot: {0}")]
    ResidualSlot(String),
    #[error("realized TPTP `{text}` does not parse: {error}")]
    InvalidFormula { text: String, error: SyntaxError },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// What to do when a node keeps failing its constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailurePolicy {
    /// Resample the failing node, then backtrack to its parent.
    #[default]
    LocalResample,
    /// Throw the whole tree away and start again from the root.
    GlobalRestart,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub max_retries_per_node: usize,
    pub max_backtracks: usize,
    pub max_depth: usize,
    pub policy: FailurePolicy,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_retries_per_node: 64,
            max_backtracks: 256,
            max_depth: 32,
            policy: FailurePolicy::LocalResample,
        }
    }
}

impl GenConfig {
    pub fn with_seed(seed: u64) -> Self {
        GenConfig {
            seed,
            ..GenConfig::default()
        }
    }
}

/// The random stream for problem `index` of a run seeded with `seed`.
pub fn problem_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One generator step, for debugging grammars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Expand { path: Vec<usize>, rule: String },
    Constraint { path: Vec<usize>, id: String, passed: bool },
    Backtrack { path: Vec<usize> },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = |path: &[usize]| {
            let parts: Vec<String> = path.iter().map(usize::to_string).collect();
            format!("/{}", parts.join("/"))
        };
        match self {
            TraceEvent::Expand { path, rule } => write!(f, "expand {} {rule}", p(path)),
            TraceEvent::Constraint { path, id, passed } => {
                write!(f, "check {} {id} {}", p(path), if *passed { "pass" } else { "fail" })
            }
            TraceEvent::Backtrack { path } => write!(f, "backtrack {}", p(path)),
        }
    }
}

/// Picks a rule producing `ty` with probability proportional to its weight.
pub fn sample_rule<'g, R: Rng + ?Sized>(
    grammar: &'g Grammar,
    ty: &TypeName,
    rng: &mut R,
) -> Result<&'g Arc<Rule>, GenError> {
    let total: f64 = grammar.producing(ty).map(|r| r.weight).sum();
    let mut last = None;
    let mut x = rng.random::<f64>() * total;
    for rule in grammar.producing(ty) {
        if x < rule.weight {
            return Ok(rule);
        }
        x -= rule.weight;
        last = Some(rule);
    }
    // rounding can leave x just above the final weight
    last.ok_or_else(|| GenError::NoProducingRule(ty.to_string()))
}

/// Generates a tree for `start` from the RNG seeded by `config.seed`.
pub fn generate(grammar: &Grammar, start: &TypeName, config: &GenConfig) -> Result<DerivationTree, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    generate_with_rng(grammar, start, config, &mut rng, None)
}

/// Generates a tree drawing randomness from `rng`, optionally recording every step.
pub fn generate_with_rng<R: Rng + ?Sized>(
    grammar: &Grammar,
    start: &TypeName,
    config: &GenConfig,
    rng: &mut R,
    trace: Option<&mut Vec<TraceEvent>>,
) -> Result<DerivationTree, GenError> {
    if !grammar.has_producer(start) {
        return Err(GenError::NoProducingRule(start.to_string()));
    }
    let mut gen = Generator {
        grammar,
        config,
        rng,
        trace,
        backtracks: 0,
        tree: DerivationTree::Leaf(start.clone()),
    };
    loop {
        match gen.expand(&mut Vec::new(), 1) {
            Ok(()) => return Ok(gen.tree),
            Err(Failure::Fatal(e)) => return Err(e),
            Err(Failure::Rejected) => {
                if config.policy == FailurePolicy::GlobalRestart {
                    gen.note_backtrack(&[])?;
                }
                gen.tree = DerivationTree::Leaf(start.clone());
            }
        }
    }
}

enum Failure {
    /// The subtree could not be completed; the caller may retry.
    Rejected,
    Fatal(GenError),
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Self {
        Failure::Fatal(e)
    }
}

struct Generator<'a, R: Rng + ?Sized> {
    grammar: &'a Grammar,
    config: &'a GenConfig,
    rng: &'a mut R,
    trace: Option<&'a mut Vec<TraceEvent>>,
    backtracks: usize,
    tree: DerivationTree,
}

impl<R: Rng + ?Sized> Generator<'_, R> {
    fn emit(&mut self, event: impl FnOnce() -> TraceEvent) {
        if let Some(t) = self.trace.as_deref_mut() {
            t.push(event());
        }
    }

    fn note_backtrack(&mut self, path: &[usize]) -> Result<(), GenError> {
        self.emit(|| TraceEvent::Backtrack { path: path.to_vec() });
        self.backtracks += 1;
        if self.backtracks > self.config.max_backtracks {
            return Err(GenError::GenerationExhausted(self.config.max_backtracks));
        }
        Ok(())
    }

    fn node_mut(&mut self, path: &[usize]) -> &mut DerivationTree {
        self.tree
            .at_mut(path)
            .expect("path addresses a node of the partial tree")
    }

    /// Expands the leaf at `path` and everything below it, left to right.
    fn expand(&mut self, path: &mut Vec<usize>, depth: usize) -> Result<(), Failure> {
        if depth > self.config.max_depth {
            return Err(GenError::DepthExceeded(self.config.max_depth).into());
        }
        let ty = self.node_mut(path).output_type().clone();
        let local = self.config.policy == FailurePolicy::LocalResample;
        let attempts = if local { self.config.max_retries_per_node } else { 1 };
        for _ in 0..attempts {
            let rule = Arc::clone(sample_rule(self.grammar, &ty, self.rng)?);
            self.emit(|| TraceEvent::Expand {
                path: path.clone(),
                rule: rule.signature.to_string(),
            });
            let children = rule
                .signature
                .inputs
                .iter()
                .cloned()
                .map(DerivationTree::Leaf)
                .collect();
            *self.node_mut(path) = DerivationTree::node(Arc::clone(&rule), children);
            let mut complete = true;
            for i in 0..rule.signature.arity() {
                path.push(i);
                let r = self.expand(path, depth + 1);
                path.pop();
                match r {
                    Ok(()) => {}
                    Err(Failure::Rejected) if local => {
                        complete = false;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if complete {
                let languages = self.grammar.languages().len();
                self.node_mut(path).fill_cache(languages).map_err(GenError::from)?;
                if self.check(path, &rule) {
                    return Ok(());
                }
                if !local {
                    return Err(Failure::Rejected);
                }
            }
        }
        *self.node_mut(path) = DerivationTree::Leaf(ty);
        if local {
            self.note_backtrack(path)?;
        }
        Err(Failure::Rejected)
    }

    fn check(&mut self, path: &[usize], rule: &Rule) -> bool {
        let ids = rule.constraints.iter().chain(
            self.grammar
                .default_constraints()
                .iter()
                .filter(|d| !rule.constraints.contains(d)),
        );
        for id in ids {
            let f = self
                .grammar
                .constraint_registry()
                .get(id)
                .expect("constraint ids are validated at registration");
            let node = self
                .tree
                .at(path)
                .and_then(DerivationTree::as_expansion)
                .expect("node was just expanded");
            let passed = f(&ConstraintContext {
                grammar: self.grammar,
                tree: &self.tree,
                path,
                node,
            });
            if let Some(t) = self.trace.as_deref_mut() {
                t.push(TraceEvent::Constraint {
                    path: path.to_vec(),
                    id: id.clone(),
                    passed,
                });
            }
            if !passed {
                return false;
            }
        }
        true
    }
}

/// Every constraint violation in a finished tree, as `(path, constraint id)`.
pub fn constraint_violations(grammar: &Grammar, tree: &DerivationTree) -> Vec<(Vec<usize>, String)> {
    let mut out = Vec::new();
    tree.walk(&mut |path, node| {
        let ids = node.rule.constraints.iter().chain(grammar.default_constraints().iter());
        for id in ids {
            let Some(f) = grammar.constraint_registry().get(id) else {
                continue;
            };
            let ctx = ConstraintContext {
                grammar,
                tree,
                path,
                node,
            };
            if !f(&ctx) {
                out.push((path.to_vec(), id.clone()));
            }
        }
    });
    out
}

/// A generated sentence with its surface forms and logical profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub kind: TypeName,
    /// One realization per grammar language, in grammar order.
    pub realizations: Vec<String>,
    /// Parsed TPTP form, when the grammar has a `tptp` language.
    pub formula: Option<Formula>,
    /// Predicate and constant names of the TPTP form.
    pub symbols: BTreeSet<String>,
    pub operators: OperatorCounts,
}

impl Statement {
    /// Builds a statement from a complete tree.
    pub fn from_tree(grammar: &Grammar, tree: &DerivationTree) -> Result<Statement, GenError> {
        let realizations = (0..grammar.languages().len())
            .map(|l| tree.realize(l))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(r) = realizations.iter().find(|r| has_slot(r)) {
            return Err(GenError::ResidualSlot(r.clone()));
        }
        let mut statement = Statement {
            kind: tree.output_type().clone(),
            realizations,
            formula: None,
            symbols: BTreeSet::new(),
            operators: OperatorCounts::default(),
        };
        if let Ok(i) = grammar.language_index("tptp") {
            let text = &statement.realizations[i];
            let invalid = |error| GenError::InvalidFormula {
                text: text.clone(),
                error,
            };
            let formula = parse_fof(text).map_err(invalid)?;
            statement.operators = operator_counts(text).map_err(invalid)?;
            statement.symbols = formula.symbols();
            statement.formula = Some(formula);
        }
        Ok(statement)
    }

    pub fn realization(&self, grammar: &Grammar, language: &str) -> Option<&str> {
        grammar
            .language_index(language)
            .ok()
            .map(|i| self.realizations[i].as_str())
    }
}

/// Generates a tree and packages it as a [`Statement`].
pub fn generate_statement(grammar: &Grammar, start: &TypeName, config: &GenConfig) -> Result<Statement, GenError> {
    let tree = generate(grammar, start, config)?;
    Statement::from_tree(grammar, &tree)
}
