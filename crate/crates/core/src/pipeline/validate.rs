//! Post-hoc checks over an emitted dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::output::{read_jsonl, ProblemRecord};
use super::split::{split_key, Split, SplitRatios};
use super::PipelineError;
use crate::fol::conditional_scope_ok;
use crate::logic::{label, parse_fof, Decider, Formula, Label, SatStatus, Term};

#[derive(Debug, Clone)]
pub struct ValidationOptions {
    /// How many problems to relabel from scratch; all by default.
    pub relabel_sample: usize,
    pub seed: u64,
    pub decider: Decider,
    pub ratios: SplitRatios,
    /// Absolute tolerance on each split share.
    pub split_tolerance: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            relabel_sample: usize::MAX,
            seed: 0,
            decider: Decider::default(),
            ratios: SplitRatios::default(),
            split_tolerance: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub id: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self.message)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub problems: usize,
    pub relabeled: usize,
    pub labels: BTreeMap<Label, usize>,
    pub splits: BTreeMap<Split, usize>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Conditional-scope and sibling-duplicate findings for one formula.
pub fn scan_statement(f: &Formula) -> Vec<String> {
    let mut out = Vec::new();
    if !conditional_scope_ok(f) {
        out.push(format!("conditional under negation or another conditional in `{f}`"));
    }
    fn dup(f: &Formula, out: &mut Vec<String>) {
        match f {
            Formula::And(xs) | Formula::Or(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if xs[..i].contains(x) {
                        out.push(format!("repeated operand `{x}`"));
                    }
                    dup(x, out);
                }
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) | Formula::Xor(a, b) => {
                if a == b {
                    out.push(format!("identical operands `{a}`"));
                }
                dup(a, out);
                dup(b, out);
            }
            Formula::Atom { args, .. } => {
                for (i, t) in args.iter().enumerate() {
                    if matches!(t, Term::Const(_)) && args[..i].contains(t) {
                        out.push(format!("repeated argument `{t}` in `{f}`"));
                    }
                }
            }
            Formula::Not(x) | Formula::Forall(_, x) | Formula::Exists(_, x) => dup(x, out),
            _ => {}
        }
    }
    dup(f, &mut out);
    out
}

pub fn validate_dataset(dir: &Path, opts: &ValidationOptions) -> Result<ValidationReport, PipelineError> {
    let mut rows = Vec::new();
    for split in Split::ALL {
        for r in read_jsonl(&dir.join(format!("{split}.jsonl")))? {
            rows.push((split, r));
        }
    }
    Ok(validate_records(&rows, opts))
}

/// Checks every row, relabels a keyed-hash sample, and checks split shares.
pub fn validate_records(rows: &[(Split, ProblemRecord)], opts: &ValidationOptions) -> ValidationReport {
    let mut report = ValidationReport {
        problems: rows.len(),
        ..Default::default()
    };
    let mut ids = BTreeSet::new();
    let mut parsed: Vec<Option<(Vec<Formula>, Formula)>> = Vec::with_capacity(rows.len());
    for (split, r) in rows {
        let mut bad = |message: String| {
            report.violations.push(Violation {
                id: r.id.clone(),
                message,
            })
        };
        *report.labels.entry(r.label).or_default() += 1;
        *report.splits.entry(*split).or_default() += 1;
        if !ids.insert(r.id.clone()) {
            bad("duplicate id".into());
        }
        if r.split != *split {
            bad(format!("split field `{}` stored in {split}.jsonl", r.split));
        }
        if !(1..=32).contains(&r.n_premises) {
            bad(format!("n_premises {} outside 1..=32", r.n_premises));
        }
        for (lang, len) in [
            ("eng", r.premises_eng.as_ref().map(Vec::len)),
            ("tptp", r.premises_tptp.as_ref().map(Vec::len)),
        ] {
            if let Some(len) = len.filter(|&l| l != r.n_premises) {
                bad(format!("{len} {lang} premises but n_premises = {}", r.n_premises));
            }
        }
        match (&r.label, &r.used_premises) {
            (Label::Neutral, Some(_)) => bad("neutral problem lists used premises".into()),
            (Label::Entailment | Label::Contradiction, None) => bad("non-neutral problem without used premises".into()),
            (_, Some(used)) => {
                if used.is_empty() || used.windows(2).any(|w| w[0] >= w[1]) || used.iter().any(|&i| i >= r.n_premises) {
                    bad(format!("malformed used_premises {used:?}"));
                }
            }
            _ => {}
        }
        let (Some(ps), Some(h)) = (&r.premises_tptp, &r.hypothesis_tptp) else {
            parsed.push(None);
            continue;
        };
        let formulas: Result<Vec<Formula>, _> = ps.iter().map(|p| parse_fof(p)).collect();
        let (formulas, hyp) = match (formulas, parse_fof(h)) {
            (Ok(f), Ok(h)) => (f, h),
            (Err(e), _) | (_, Err(e)) => {
                bad(format!("TPTP does not parse: {e}"));
                parsed.push(None);
                continue;
            }
        };
        for f in formulas.iter().chain([&hyp]) {
            for issue in scan_statement(f) {
                bad(issue);
            }
        }
        let covered: BTreeSet<String> = formulas.iter().flat_map(Formula::symbols).collect();
        let missing: Vec<String> = hyp.symbols().difference(&covered).cloned().collect();
        if !missing.is_empty() {
            bad(format!("hypothesis symbols {missing:?} absent from premises"));
        }
        match opts.decider.check(&formulas).map(|v| v.status) {
            Ok(SatStatus::Sat) => {}
            other => bad(format!("premises not shown satisfiable: {other:?}")),
        }
        match opts.decider.check(std::slice::from_ref(&hyp)).map(|v| v.status) {
            Ok(SatStatus::Sat) => {}
            other => bad(format!("hypothesis not shown satisfiable: {other:?}")),
        }
        parsed.push(Some((formulas, hyp)));
    }

    let mut order: Vec<usize> = (0..rows.len()).filter(|&i| parsed[i].is_some()).collect();
    order.sort_by_key(|&i| (split_key(opts.seed, &rows[i].1.id), i));
    for &i in order.iter().take(opts.relabel_sample) {
        let r = &rows[i].1;
        let (ps, h) = parsed[i].as_ref().expect("filtered");
        report.relabeled += 1;
        match label(ps, h, &opts.decider) {
            Ok(l) if l.label == r.label && l.used_premises == r.used_premises => {}
            Ok(l) => report.violations.push(Violation {
                id: r.id.clone(),
                message: format!(
                    "stored {} used={:?}, recomputed {} used={:?}",
                    r.label, r.used_premises, l.label, l.used_premises
                ),
            }),
            Err(e) => report.violations.push(Violation {
                id: r.id.clone(),
                message: format!("relabeling failed: {e}"),
            }),
        }
    }

    let total = rows.len().max(1) as f64;
    for split in Split::ALL {
        let share = report.splits.get(&split).copied().unwrap_or(0) as f64 / total;
        let want = opts.ratios.get(split);
        if (share - want).abs() > opts.split_tolerance {
            report.violations.push(Violation {
                id: "*".into(),
                message: format!(
                    "{split} share {share:.4} differs from {want} by more than {}",
                    opts.split_tolerance
                ),
            });
        }
    }
    report
}
