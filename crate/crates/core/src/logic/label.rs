use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fof::Formula;
use super::{Decider, LogicError, SatStatus, Session, Source, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Contradiction,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Contradiction, Label::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Contradiction => "contradiction",
            Label::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown label `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPair {
    pub label: Label,
    /// Minimal premise subset behind a non-neutral label.
    pub used_premises: Option<Vec<usize>>,
    pub decided_by: Source,
}

/// Entailment when premises plus the negated hypothesis are unsatisfiable,
/// contradiction when premises plus the hypothesis are, neutral otherwise.
pub fn label(premises: &[Formula], hypothesis: &Formula, decider: &Decider) -> Result<LabeledPair, LogicError> {
    let formulas = pair_formulas(premises, hypothesis);
    let mut labeler = Labeler::new(decider.session(&formulas), premises.len());
    let label = labeler.label()?;
    let used_premises = match label {
        Label::Neutral => None,
        l => Some(labeler.minimize(l)?),
    };
    Ok(LabeledPair {
        label,
        used_premises,
        decided_by: labeler.source,
    })
}

/// Deletion-minimal premise subset that keeps a non-neutral label.
pub fn used_premises(
    premises: &[Formula],
    hypothesis: &Formula,
    label: Label,
    decider: &Decider,
) -> Result<Vec<usize>, LogicError> {
    assert_ne!(label, Label::Neutral, "neutral pairs use no premises");
    let formulas = pair_formulas(premises, hypothesis);
    let mut labeler = Labeler::new(decider.session(&formulas), premises.len());
    labeler.minimize(label)
}

fn pair_formulas(premises: &[Formula], hypothesis: &Formula) -> Vec<Formula> {
    let mut formulas = premises.to_vec();
    formulas.push(hypothesis.clone());
    formulas.push(hypothesis.negate());
    formulas
}

struct Labeler<'a> {
    session: Session<'a>,
    n: usize,
    source: Source,
}

impl<'a> Labeler<'a> {
    fn new(session: Session<'a>, n: usize) -> Self {
        Labeler {
            session,
            n,
            source: Source::Internal,
        }
    }

    fn hyp_index(&self, label: Label) -> usize {
        match label {
            Label::Entailment => self.n + 1,
            _ => self.n,
        }
    }

    fn check(&mut self, premises: &[usize], label: Label) -> Result<bool, LogicError> {
        let mut subset = premises.to_vec();
        subset.push(self.hyp_index(label));
        let Verdict { status, source, .. } = self.session.check(&subset)?;
        if source == Source::External {
            self.source = Source::External;
        }
        match status {
            SatStatus::Unsat => Ok(true),
            SatStatus::Sat => Ok(false),
            SatStatus::Unknown => Err(LogicError::Undecided),
        }
    }

    fn label(&mut self) -> Result<Label, LogicError> {
        let all: Vec<usize> = (0..self.n).collect();
        let entails = self.check(&all, Label::Entailment)?;
        let contradicts = self.check(&all, Label::Contradiction)?;
        match (entails, contradicts) {
            (true, true) => Err(LogicError::InconsistentPremises),
            (true, false) => Ok(Label::Entailment),
            (false, true) => Ok(Label::Contradiction),
            (false, false) => Ok(Label::Neutral),
        }
    }

    /// Tries dropping premises from the last to the first. A known
    /// unsatisfiable core that avoids the candidate answers the query without
    /// a solver call, so the result equals plain deletion.
    fn minimize(&mut self, label: Label) -> Result<Vec<usize>, LogicError> {
        let mut kept: Vec<usize> = (0..self.n).collect();
        if !self.check(&kept, label)? {
            return Err(LogicError::Undecided);
        }
        let mut core = self.premise_core();
        for i in (0..self.n).rev() {
            if core.as_ref().is_some_and(|c| !c.contains(&i)) {
                kept.retain(|&k| k != i);
                continue;
            }
            let trial: Vec<usize> = kept.iter().copied().filter(|&k| k != i).collect();
            if self.check(&trial, label)? {
                kept = trial;
                core = self.premise_core();
            }
        }
        Ok(kept)
    }

    fn premise_core(&self) -> Option<Vec<usize>> {
        self.session
            .core()
            .map(|c| c.iter().copied().filter(|&i| i < self.n).collect())
    }
}
