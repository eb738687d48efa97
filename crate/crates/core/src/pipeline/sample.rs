//! Drawing one candidate problem: premises, hypothesis and their checks.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{PipelineError, SamplingConfig};
use crate::fol::{symmetry_axiom, GrammarPreset, Pool};
use crate::generator::{generate_with_rng, GenConfig, GenError, Statement};
use crate::grammar::{Grammar, TypeName};
use crate::logic::{Decider, Formula, SatStatus};

/// Premises and hypothesis before labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub premises: Vec<Statement>,
    pub hypothesis: Statement,
}

impl Candidate {
    pub fn premise_formulas(&self) -> Vec<Formula> {
        self.premises.iter().map(formula).collect()
    }

    pub fn hypothesis_formula(&self) -> Formula {
        formula(&self.hypothesis)
    }
}

fn formula(s: &Statement) -> Formula {
    s.formula.clone().expect("statements carry their TPTP formula")
}

/// Picks the lexical symbols one problem may use.
pub fn sample_vocabulary<R: Rng + ?Sized>(
    preset: &GrammarPreset,
    cfg: &SamplingConfig,
    rng: &mut R,
) -> BTreeSet<String> {
    let mut keep = BTreeSet::new();
    for (pool, symbols) in preset.pools() {
        let (lo, hi) = match pool {
            Pool::Names => cfg.names,
            Pool::Adjectives => cfg.adjectives,
            Pool::Predicates => cfg.predicates,
            Pool::Relations => cfg.relations,
        };
        let k = rng.random_range(lo..=hi).min(symbols.len());
        keep.extend(symbols.choose_multiple(rng, k).cloned());
    }
    keep
}

fn generate<R: Rng + ?Sized>(
    grammar: &Grammar,
    start: &TypeName,
    gen: &GenConfig,
    rng: &mut R,
) -> Result<Statement, GenError> {
    let tree = generate_with_rng(grammar, start, gen, rng, None)?;
    Statement::from_tree(grammar, &tree)
}

fn pick_type<'a, R: Rng + ?Sized>(types: &'a [(TypeName, f64)], rng: &mut R) -> &'a TypeName {
    let total: f64 = types.iter().map(|(_, w)| w).sum();
    let mut x = rng.random::<f64>() * total;
    for (t, w) in types {
        if x < *w {
            return t;
        }
        x -= w;
    }
    &types[types.len() - 1].0
}

fn axiom_statement(grammar: &Grammar, tptp: String, eng: String) -> Statement {
    let formula = crate::logic::parse_fof(&tptp).expect("symmetry axioms are well formed");
    let realizations = grammar
        .languages()
        .iter()
        .map(|l| if l == "tptp" { tptp.clone() } else { eng.clone() })
        .collect();
    Statement {
        kind: TypeName::new("axiom").expect("static type name"),
        realizations,
        operators: crate::logic::operator_counts(&tptp).expect("axiom lexes"),
        symbols: formula.symbols(),
        formula: Some(formula),
    }
}

/// Draws `n ~ U{min..max}` premises and a hypothesis whose symbols the
/// premises cover. Jointly unsatisfiable premises are repaired by resampling
/// a premise from the refutation; unsatisfiable or valid hypotheses are
/// resampled.
pub fn sample_problem<R: Rng + ?Sized>(
    preset: &GrammarPreset,
    cfg: &SamplingConfig,
    decider: &Decider,
    rng: &mut R,
) -> Result<Candidate, PipelineError> {
    let n = premise_count(cfg, rng);
    let vocabulary = sample_vocabulary(preset, cfg, rng);
    let grammar = preset.restricted(&vocabulary);
    let gen = &cfg.generation;

    let mut premises: Vec<Statement> = Vec::with_capacity(n);
    let mut axiomatized = BTreeSet::new();
    if let Some(room) = &preset.room_type {
        if rng.random::<f64>() < cfg.room_probability {
            premises.push(generate(&grammar, room, gen, rng)?);
        }
    }
    let mut failures = 0;
    while premises.len() < n {
        let ty = pick_type(&preset.sentence_types, rng);
        let s = generate(&grammar, ty, gen, rng)?;
        let new_relations: Vec<&String> = preset
            .symmetric
            .keys()
            .filter(|r| s.symbols.contains(*r) && !axiomatized.contains(*r))
            .collect();
        if premises.len() + 1 + new_relations.len() > n {
            failures += 1;
            if failures > cfg.premise_retries {
                return Err(PipelineError::SamplingExhausted("premises"));
            }
            continue;
        }
        let axioms: Vec<Statement> = new_relations
            .into_iter()
            .map(|r| {
                axiomatized.insert(r.clone());
                let (tptp, eng) = symmetry_axiom(&preset.symmetric[r]);
                axiom_statement(&grammar, tptp, eng)
            })
            .collect();
        premises.push(s);
        premises.extend(axioms);
    }

    // repair paradoxes
    let mut repairs = 0;
    loop {
        let formulas: Vec<Formula> = premises.iter().map(formula).collect();
        let mut session = decider.session(&formulas);
        let all: Vec<usize> = (0..formulas.len()).collect();
        let verdict = session.check(&all)?;
        match verdict.status {
            SatStatus::Sat => break,
            SatStatus::Unknown => return Err(PipelineError::SamplingExhausted("undecided premises")),
            SatStatus::Unsat => {}
        }
        repairs += 1;
        if repairs > cfg.premise_retries {
            return Err(PipelineError::SamplingExhausted("consistent premises"));
        }
        let culprit = session
            .core()
            .and_then(|c| {
                c.iter()
                    .rev()
                    .find(|&&i| premises[i].kind.as_str() != "axiom" && !is_room(preset, &premises[i]))
                    .copied()
            })
            .or_else(|| {
                (0..premises.len())
                    .rev()
                    .find(|&i| premises[i].kind.as_str() != "axiom")
            })
            .ok_or(PipelineError::SamplingExhausted("consistent premises"))?;
        let kind = premises[culprit].kind.clone();
        // keep the symbol that triggered an axiom, so the axiom stays relevant
        let replacement = loop {
            let s = generate(&grammar, &kind, gen, rng)?;
            let adds_relation = preset
                .symmetric
                .keys()
                .any(|r| s.symbols.contains(r) && !axiomatized.contains(r));
            if !adds_relation {
                break s;
            }
            failures += 1;
            if failures > cfg.premise_retries {
                return Err(PipelineError::SamplingExhausted("premises"));
            }
        };
        premises[culprit] = replacement;
    }

    // hypothesis over symbols the premises already use
    let covered: BTreeSet<String> = premises.iter().flat_map(|p| p.symbols.iter().cloned()).collect();
    let hyp_grammar = preset.restricted(&covered);
    for _ in 0..cfg.hypothesis_retries {
        let h = match generate(&hyp_grammar, &preset.hypothesis_type, gen, rng) {
            Ok(h) => h,
            Err(GenError::GenerationExhausted(_)) => continue,
            // the premises leave no claim expressible
            Err(GenError::NoProducingRule(_)) => break,
            Err(e) => return Err(e.into()),
        };
        if !h.symbols.is_subset(&covered) {
            continue;
        }
        // satisfiable and not valid
        let f = formula(&h);
        let pair = [f.negate(), f];
        let mut session = decider.session(&pair);
        if session.check(&[1])?.status == SatStatus::Sat && session.check(&[0])?.status == SatStatus::Sat {
            return Ok(Candidate {
                premises,
                hypothesis: h,
            });
        }
    }
    Err(PipelineError::SamplingExhausted("hypothesis"))
}

fn is_room(preset: &GrammarPreset, s: &Statement) -> bool {
    preset.room_type.as_ref() == Some(&s.kind)
}

/// First draw of [`sample_problem`]: the number of premises.
pub fn premise_count<R: Rng + ?Sized>(cfg: &SamplingConfig, rng: &mut R) -> usize {
    rng.random_range(cfg.min_premises..=cfg.max_premises)
}
