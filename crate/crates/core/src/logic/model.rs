//! Finite structures and direct recursive evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::fof::{Formula, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("constant `{0}` has no interpretation")]
    UnknownConstant(String),
    #[error("variable `{0}` is unbound")]
    UnboundVariable(String),
}

/// A finite structure over elements `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct FiniteModel {
    pub size: usize,
    pub constants: BTreeMap<String, usize>,
    /// Extension of each predicate symbol; predicates absent here are empty.
    pub relations: BTreeMap<String, BTreeSet<Vec<usize>>>,
}

impl FiniteModel {
    pub fn holds(&self, pred: &str, args: &[usize]) -> bool {
        self.relations.get(pred).is_some_and(|r| r.contains(args))
    }

    /// Evaluates a closed formula.
    pub fn satisfies(&self, formula: &Formula) -> Result<bool, EvalError> {
        self.eval(formula, &mut HashMap::new())
    }

    fn term(&self, t: &Term, env: &HashMap<String, usize>) -> Result<usize, EvalError> {
        match t {
            Term::Var(v) => env.get(v).copied().ok_or_else(|| EvalError::UnboundVariable(v.clone())),
            Term::Const(c) => self
                .constants
                .get(c)
                .copied()
                .ok_or_else(|| EvalError::UnknownConstant(c.clone())),
        }
    }

    fn eval(&self, f: &Formula, env: &mut HashMap<String, usize>) -> Result<bool, EvalError> {
        Ok(match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom { pred, args } => {
                let args = args.iter().map(|a| self.term(a, env)).collect::<Result<Vec<_>, _>>()?;
                self.holds(pred, &args)
            }
            Formula::Eq(a, b) => self.term(a, env)? == self.term(b, env)?,
            Formula::Not(x) => !self.eval(x, env)?,
            Formula::And(xs) => {
                for x in xs {
                    if !self.eval(x, env)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(xs) => {
                for x in xs {
                    if self.eval(x, env)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Implies(a, b) => !self.eval(a, env)? || self.eval(b, env)?,
            Formula::Iff(a, b) => self.eval(a, env)? == self.eval(b, env)?,
            Formula::Xor(a, b) => self.eval(a, env)? != self.eval(b, env)?,
            Formula::Forall(vars, body) => self.quantify(vars, body, env, true)?,
            Formula::Exists(vars, body) => self.quantify(vars, body, env, false)?,
        })
    }

    fn quantify(
        &self,
        vars: &[String],
        body: &Formula,
        env: &mut HashMap<String, usize>,
        universal: bool,
    ) -> Result<bool, EvalError> {
        let Some((first, rest)) = vars.split_first() else {
            return self.eval(body, env);
        };
        let saved = env.get(first).copied();
        let mut result = universal;
        for e in 0..self.size {
            env.insert(first.clone(), e);
            let v = self.quantify(rest, body, env, universal)?;
            if v != universal {
                result = v;
                break;
            }
        }
        match saved {
            Some(s) => env.insert(first.clone(), s),
            None => env.remove(first),
        };
        Ok(result)
    }
}

impl fmt::Display for FiniteModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "domain {{0..{}}}", self.size)?;
        for (c, e) in &self.constants {
            write!(f, "; {c}={e}")?;
        }
        for (p, ext) in &self.relations {
            let tuples: Vec<String> = ext
                .iter()
                .map(|t| t.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
                .collect();
            write!(f, "; {p}={{{}}}", tuples.join(" "))?;
        }
        Ok(())
    }
}
