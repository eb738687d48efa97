//! First-order formulas, satisfiability deciders and NLI labeling.

pub mod finder;
pub mod fof;
mod label;
pub mod model;
pub mod prover;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use finder::{check_sat_bounded, Completeness, Theory};
pub use fof::{operator_counts, parse_fof, parse_tptp, FofUnit, Formula, OperatorCounts, SyntaxError, Term};
pub use label::{label, used_premises, Label, LabeledPair};
pub use model::{EvalError, FiniteModel};
pub use prover::{check_sat_external, emit_tptp, ProverConfig, PROVER_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SatStatus {
    Sat,
    Unsat,
    Unknown,
}

impl fmt::Display for SatStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SatStatus::Sat => "SAT",
            SatStatus::Unsat => "UNSAT",
            SatStatus::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Internal,
    External,
}

/// Outcome of one satisfiability check. A witness is only ever produced by
/// the internal model finder.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: SatStatus,
    pub witness: Option<FiniteModel>,
    pub source: Source,
}

#[derive(Debug, Error)]
pub enum LogicError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("model bound {bound} is below the {needed} elements needed for a complete search")]
    BoundTooSmall { bound: usize, needed: String },
    #[error("prover `{0}` could not be started")]
    ProverNotFound(String),
    #[error("prover exited with {status} and no SZS status line")]
    ProverCrashed { status: String },
    #[error("prover i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("no external prover configured (set --prover-cmd or {PROVER_ENV})")]
    NoProver,
    #[error("a satisfiability check returned UNKNOWN")]
    Undecided,
    #[error("premises are jointly unsatisfiable")]
    InconsistentPremises,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeciderMode {
    Internal,
    External,
    Fallback,
}

impl std::str::FromStr for DeciderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "internal" => Ok(DeciderMode::Internal),
            "external" => Ok(DeciderMode::External),
            "fallback" => Ok(DeciderMode::Fallback),
            other => Err(format!(
                "unknown decider `{other}` (expected internal, external or fallback)"
            )),
        }
    }
}

pub const DEFAULT_MODEL_BOUND: usize = 128;

/// Which procedures answer satisfiability queries, and with what limits.
#[derive(Debug, Clone, PartialEq)]
pub struct Decider {
    pub mode: DeciderMode,
    pub model_bound: usize,
    /// Turn inconclusive internal refutations into [`LogicError::BoundTooSmall`].
    pub strict: bool,
    pub prover: Option<ProverConfig>,
}

impl Default for Decider {
    fn default() -> Self {
        Decider::internal(DEFAULT_MODEL_BOUND)
    }
}

impl Decider {
    pub fn internal(model_bound: usize) -> Decider {
        Decider {
            mode: DeciderMode::Internal,
            model_bound,
            strict: false,
            prover: None,
        }
    }

    pub fn external(prover: ProverConfig) -> Decider {
        Decider {
            mode: DeciderMode::External,
            model_bound: DEFAULT_MODEL_BOUND,
            strict: false,
            prover: Some(prover),
        }
    }

    /// Opens a session answering queries about subsets of `formulas`.
    pub fn session<'a>(&'a self, formulas: &'a [Formula]) -> Session<'a> {
        Session {
            decider: self,
            formulas,
            theory: None,
            core: None,
        }
    }

    pub fn check(&self, formulas: &[Formula]) -> Result<Verdict, LogicError> {
        let all: Vec<usize> = (0..formulas.len()).collect();
        self.session(formulas).check(&all)
    }

    fn prover(&self) -> Result<&ProverConfig, LogicError> {
        self.prover.as_ref().ok_or(LogicError::NoProver)
    }
}

/// Incremental queries over a fixed formula list.
pub struct Session<'a> {
    decider: &'a Decider,
    formulas: &'a [Formula],
    theory: Option<Theory>,
    core: Option<Vec<usize>>,
}

impl Session<'_> {
    pub fn formulas(&self) -> &[Formula] {
        self.formulas
    }

    /// Checks the conjunction of the formulas at `subset`.
    pub fn check(&mut self, subset: &[usize]) -> Result<Verdict, LogicError> {
        self.core = None;
        match self.decider.mode {
            DeciderMode::Internal => self.internal(subset),
            DeciderMode::External => self.external(subset),
            DeciderMode::Fallback => {
                let v = self.internal(subset)?;
                if v.status == SatStatus::Unknown && self.decider.prover.is_some() {
                    self.external(subset)
                } else {
                    Ok(v)
                }
            }
        }
    }

    /// After an UNSAT answer: indices of `subset` already known to be jointly
    /// unsatisfiable, when the decider could tell.
    pub fn core(&self) -> Option<&[usize]> {
        self.core.as_deref()
    }

    fn internal(&mut self, subset: &[usize]) -> Result<Verdict, LogicError> {
        let bound = self.decider.model_bound;
        let formulas = self.formulas;
        let theory = self.theory.get_or_insert_with(|| Theory::new(formulas, bound));
        let verdict = theory.check(subset, false);
        match verdict.status {
            SatStatus::Unsat => self.core = theory.last_core().map(<[usize]>::to_vec),
            SatStatus::Unknown if self.decider.strict => {
                let c = theory.completeness();
                return Err(LogicError::BoundTooSmall {
                    bound: c.searched,
                    needed: c.needed.map_or("unbounded".into(), |n| n.to_string()),
                });
            }
            _ => {}
        }
        Ok(verdict)
    }

    fn external(&mut self, subset: &[usize]) -> Result<Verdict, LogicError> {
        let prover = self.decider.prover()?;
        let named: Vec<(usize, &Formula)> = subset.iter().map(|&i| (i, &self.formulas[i])).collect();
        let (verdict, used) = prover::run_prover(prover, &named)?;
        if verdict.status == SatStatus::Unsat {
            self.core = used;
        }
        Ok(verdict)
    }
}

/// Default per-call timeout for external provers.
pub const DEFAULT_PROVER_TIMEOUT: Duration = Duration::from_secs(5);
