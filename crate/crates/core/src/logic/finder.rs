//! Bounded finite-model search by propositional grounding.
//!
//! Formulas are put in negation normal form and existentials outside the
//! scope of any universal are replaced by fresh constants. The result is
//! grounded over a finite domain whose elements, activity flags and constant
//! denotations are all propositional variables, then handed to a CDCL solver.
//! Each input formula is guarded by a selector literal so that any subset can
//! be checked incrementally under assumptions.
//!
//! When no existential remains under a universal the problem is in the
//! Bernays–Schönfinkel class: a model exists iff one exists whose elements are
//! all named by constants, so exhausting that many elements refutes. For the
//! monadic fragment with equality the bound `c + q·2^k` (constants, quantifier
//! rank, unary predicates) plays the same role.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use varisat::{ExtendFormula, Lit, Solver};

use super::fof::{Formula, Term};
use super::model::FiniteModel;
use super::{SatStatus, Source, Verdict};

/// Converts a formula list to a theory and checks all of it at once.
pub fn check_sat_bounded(formulas: &[Formula], max_domain: usize) -> Verdict {
    let mut theory = Theory::new(formulas, max_domain);
    let all: Vec<usize> = (0..formulas.len()).collect();
    theory.check(&all, true)
}

/// Why a theory's refutations are or are not conclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Completeness {
    /// Domain size that suffices for a complete search, if one is known.
    pub needed: Option<usize>,
    /// Domain size actually searched.
    pub searched: usize,
}

impl Completeness {
    pub fn is_complete(&self) -> bool {
        self.needed.is_some_and(|n| n <= self.searched)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum NTerm {
    Var(u32),
    Const(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum NAtom {
    Pred(u32, Vec<NTerm>),
    Eq(NTerm, NTerm),
}

#[derive(Debug, Clone)]
enum Nnf {
    True,
    False,
    Lit(bool, NAtom),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
    All(u32, Box<Nnf>),
    Ex(u32, Box<Nnf>),
}

/// Symbol tables shared by every formula of a theory.
#[derive(Default)]
struct Symbols {
    preds: Vec<(String, usize)>,
    pred_ids: HashMap<(String, usize), u32>,
    consts: Vec<String>,
    const_ids: HashMap<String, u32>,
    skolems: usize,
    next_var: u32,
}

impl Symbols {
    fn pred(&mut self, name: &str, arity: usize) -> u32 {
        let key = (name.to_string(), arity);
        if let Some(&id) = self.pred_ids.get(&key) {
            return id;
        }
        let id = self.preds.len() as u32;
        self.preds.push(key.clone());
        self.pred_ids.insert(key, id);
        id
    }

    fn constant(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.const_ids.get(name) {
            return id;
        }
        let id = self.consts.len() as u32;
        self.consts.push(name.to_string());
        self.const_ids.insert(name.to_string(), id);
        id
    }

    fn fresh_var(&mut self) -> u32 {
        self.next_var += 1;
        self.next_var
    }
}

fn to_nnf(f: &Formula, positive: bool, scope: &mut Vec<(String, u32)>, syms: &mut Symbols) -> Nnf {
    let term = |t: &Term, scope: &Vec<(String, u32)>, syms: &mut Symbols| match t {
        Term::Var(v) => {
            let id = scope
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|(_, id)| *id)
                .expect("formula is closed");
            NTerm::Var(id)
        }
        Term::Const(c) => NTerm::Const(syms.constant(c)),
    };
    match f {
        Formula::True => {
            if positive {
                Nnf::True
            } else {
                Nnf::False
            }
        }
        Formula::False => {
            if positive {
                Nnf::False
            } else {
                Nnf::True
            }
        }
        Formula::Atom { pred, args } => {
            let p = syms.pred(pred, args.len());
            let args = args.iter().map(|a| term(a, scope, syms)).collect();
            Nnf::Lit(positive, NAtom::Pred(p, args))
        }
        Formula::Eq(a, b) => {
            let a = term(a, scope, syms);
            let b = term(b, scope, syms);
            Nnf::Lit(positive, NAtom::Eq(a, b))
        }
        Formula::Not(x) => to_nnf(x, !positive, scope, syms),
        Formula::And(xs) | Formula::Or(xs) => {
            let parts = xs.iter().map(|x| to_nnf(x, positive, scope, syms)).collect();
            if matches!(f, Formula::And(_)) == positive {
                Nnf::And(parts)
            } else {
                Nnf::Or(parts)
            }
        }
        Formula::Implies(a, b) => {
            let na = to_nnf(a, !positive, scope, syms);
            let b = to_nnf(b, positive, scope, syms);
            if positive {
                Nnf::Or(vec![na, b])
            } else {
                Nnf::And(vec![na, b])
            }
        }
        Formula::Iff(a, b) | Formula::Xor(a, b) => {
            // positive iff: (~a | b) & (a | ~b); negative iff: (a | b) & (~a | ~b)
            let same = matches!(f, Formula::Iff(..)) == positive;
            let pa = to_nnf(a, true, scope, syms);
            let na = to_nnf(a, false, scope, syms);
            let pb = to_nnf(b, true, scope, syms);
            let nb = to_nnf(b, false, scope, syms);
            if same {
                Nnf::And(vec![Nnf::Or(vec![na, pb]), Nnf::Or(vec![pa, nb])])
            } else {
                Nnf::And(vec![Nnf::Or(vec![pa, pb]), Nnf::Or(vec![na, nb])])
            }
        }
        Formula::Forall(vars, body) | Formula::Exists(vars, body) => {
            let universal = matches!(f, Formula::Forall(..)) == positive;
            let n = scope.len();
            let ids: Vec<u32> = vars
                .iter()
                .map(|v| {
                    let id = syms.fresh_var();
                    scope.push((v.clone(), id));
                    id
                })
                .collect();
            let mut out = to_nnf(body, positive, scope, syms);
            scope.truncate(n);
            for id in ids.into_iter().rev() {
                out = if universal {
                    Nnf::All(id, Box::new(out))
                } else {
                    Nnf::Ex(id, Box::new(out))
                };
            }
            out
        }
    }
}

/// Replaces existentials outside universal scope with fresh constants.
fn skolemize(f: Nnf, under_forall: bool, subst: &mut HashMap<u32, u32>, syms: &mut Symbols) -> Nnf {
    let t = |t: NTerm, subst: &HashMap<u32, u32>| match t {
        NTerm::Var(v) => subst.get(&v).map(|&c| NTerm::Const(c)).unwrap_or(t),
        c => c,
    };
    match f {
        Nnf::Lit(pos, NAtom::Pred(p, args)) => {
            Nnf::Lit(pos, NAtom::Pred(p, args.into_iter().map(|a| t(a, subst)).collect()))
        }
        Nnf::Lit(pos, NAtom::Eq(a, b)) => Nnf::Lit(pos, NAtom::Eq(t(a, subst), t(b, subst))),
        Nnf::And(xs) => Nnf::And(
            xs.into_iter()
                .map(|x| skolemize(x, under_forall, subst, syms))
                .collect(),
        ),
        Nnf::Or(xs) => Nnf::Or(
            xs.into_iter()
                .map(|x| skolemize(x, under_forall, subst, syms))
                .collect(),
        ),
        Nnf::All(v, body) => Nnf::All(v, Box::new(skolemize(*body, true, subst, syms))),
        Nnf::Ex(v, body) if !under_forall => {
            syms.skolems += 1;
            let name = format!("$sk{}", syms.skolems);
            let c = syms.constant(&name);
            subst.insert(v, c);
            skolemize(*body, false, subst, syms)
        }
        Nnf::Ex(v, body) => Nnf::Ex(v, Box::new(skolemize(*body, true, subst, syms))),
        other => other,
    }
}

fn has_existential(f: &Nnf) -> bool {
    match f {
        Nnf::Ex(..) => true,
        Nnf::All(_, b) => has_existential(b),
        Nnf::And(xs) | Nnf::Or(xs) => xs.iter().any(has_existential),
        _ => false,
    }
}

fn has_eq(f: &Nnf) -> bool {
    match f {
        Nnf::Lit(_, NAtom::Eq(..)) => true,
        Nnf::All(_, b) | Nnf::Ex(_, b) => has_eq(b),
        Nnf::And(xs) | Nnf::Or(xs) => xs.iter().any(has_eq),
        _ => false,
    }
}

fn quantifier_rank(f: &Formula) -> usize {
    match f {
        Formula::Not(x) => quantifier_rank(x),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().map(quantifier_rank).max().unwrap_or(0),
        Formula::Implies(a, b) | Formula::Iff(a, b) | Formula::Xor(a, b) => quantifier_rank(a).max(quantifier_rank(b)),
        Formula::Forall(vs, b) | Formula::Exists(vs, b) => vs.len() + quantifier_rank(b),
        _ => 0,
    }
}

/// Ground propositional formula in negation normal form.
enum Prop {
    True,
    False,
    Lit(Lit),
    And(Vec<Prop>),
    Or(Vec<Prop>),
}

impl Prop {
    fn and(parts: Vec<Prop>) -> Prop {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Prop::True => {}
                Prop::False => return Prop::False,
                Prop::And(xs) => out.extend(xs),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Prop::True,
            1 => out.pop().unwrap(),
            _ => Prop::And(out),
        }
    }

    fn or(parts: Vec<Prop>) -> Prop {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Prop::False => {}
                Prop::True => return Prop::True,
                Prop::Or(xs) => out.extend(xs),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => Prop::False,
            1 => out.pop().unwrap(),
            _ => Prop::Or(out),
        }
    }

    fn lit(l: Lit, positive: bool) -> Prop {
        Prop::Lit(if positive { l } else { !l })
    }
}

/// Where a constant may point.
enum Denotation {
    /// Constant `j` is element `j`.
    Fixed(usize),
    /// One-hot over candidate elements.
    Choice(Vec<(usize, Lit)>),
}

/// A grounded formula set supporting incremental subset checks.
pub struct Theory {
    solver: Solver<'static>,
    selectors: Vec<Lit>,
    completeness: Completeness,
    size: usize,
    /// `None` means the element is always present.
    active: Vec<Option<Lit>>,
    denotations: Vec<Denotation>,
    user_consts: usize,
    const_names: Vec<String>,
    preds: Vec<(String, usize)>,
    atoms: HashMap<(u32, Vec<usize>), Lit>,
    const_atoms: HashMap<NAtom, Lit>,
    truth: Lit,
    core: Option<Vec<usize>>,
}

impl Theory {
    pub fn new(formulas: &[Formula], max_domain: usize) -> Theory {
        assert!(max_domain >= 1, "domain bound must be positive");
        let mut syms = Symbols::default();
        for f in formulas {
            for c in f.constants() {
                syms.constant(&c);
            }
        }
        let user_consts = syms.consts.len();
        let mut nnfs = Vec::with_capacity(formulas.len());
        for f in formulas {
            let n = to_nnf(f, true, &mut Vec::new(), &mut syms);
            nnfs.push(skolemize(n, false, &mut HashMap::new(), &mut syms));
        }
        let epr = !nnfs.iter().any(has_existential);
        let equality = nnfs.iter().any(has_eq);
        let monadic = syms.preds.iter().all(|(_, a)| *a <= 1);
        let consts = syms.consts.len().max(1);
        let needed = if epr {
            Some(consts)
        } else if monadic {
            let k = syms.preds.iter().filter(|(_, a)| *a == 1).count() as u32;
            let q = formulas.iter().map(quantifier_rank).max().unwrap_or(0).max(1);
            2usize
                .checked_pow(k)
                .and_then(|p| p.checked_mul(q))
                .and_then(|p| p.checked_add(syms.consts.len()))
        } else {
            None
        };
        let size = needed.map_or(max_domain, |n| n.min(max_domain));
        let completeness = Completeness { needed, searched: size };

        let mut solver = Solver::new();
        let truth = solver.new_lit();
        solver.add_clause(&[truth]);

        let identity = !equality && epr && syms.consts.len() <= size;
        let mut active = vec![None; size];
        let mut denotations = Vec::with_capacity(syms.consts.len());
        if identity {
            for j in 0..syms.consts.len() {
                denotations.push(Denotation::Fixed(j));
            }
        } else {
            for slot in active.iter_mut().skip(1) {
                *slot = Some(solver.new_lit());
            }
            for i in 2..size {
                solver.add_clause(&[!active[i].unwrap(), active[i - 1].unwrap()]);
            }
            for j in 0..syms.consts.len() {
                let top = j.min(size - 1);
                let cands: Vec<(usize, Lit)> = (0..=top).map(|i| (i, solver.new_lit())).collect();
                let any: Vec<Lit> = cands.iter().map(|&(_, l)| l).collect();
                solver.add_clause(&any);
                for a in 0..cands.len() {
                    for b in a + 1..cands.len() {
                        solver.add_clause(&[!cands[a].1, !cands[b].1]);
                    }
                    if let Some(act) = active[cands[a].0] {
                        solver.add_clause(&[!cands[a].1, act]);
                    }
                }
                denotations.push(Denotation::Choice(cands));
            }
        }

        let mut theory = Theory {
            solver,
            selectors: Vec::with_capacity(formulas.len()),
            completeness,
            size,
            active,
            denotations,
            user_consts,
            const_names: syms.consts.clone(),
            preds: syms.preds.clone(),
            atoms: HashMap::new(),
            const_atoms: HashMap::new(),
            truth,
            core: None,
        };
        for nnf in &nnfs {
            let prop = theory.ground(nnf, &mut HashMap::new());
            let sel = theory.solver.new_lit();
            theory.assert_under(sel, prop);
            theory.selectors.push(sel);
        }
        theory
    }

    pub fn completeness(&self) -> Completeness {
        self.completeness
    }

    pub fn len(&self) -> usize {
        self.selectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selectors.is_empty()
    }

    fn atom_lit(&mut self, pred: u32, args: Vec<usize>) -> Lit {
        if let Some(&l) = self.atoms.get(&(pred, args.clone())) {
            return l;
        }
        let l = self.solver.new_lit();
        self.atoms.insert((pred, args), l);
        l
    }

    fn candidates(&self, t: NTerm, env: &HashMap<u32, usize>) -> Vec<(usize, Option<Lit>)> {
        match t {
            NTerm::Var(v) => vec![(env[&v], None)],
            NTerm::Const(c) => match &self.denotations[c as usize] {
                Denotation::Fixed(e) => vec![(*e, None)],
                Denotation::Choice(cands) => cands.iter().map(|&(e, l)| (e, Some(l))).collect(),
            },
        }
    }

    /// Literal equivalent to a ground atom whose arguments may be undetermined constants.
    fn ground_atom(&mut self, atom: &NAtom, env: &HashMap<u32, usize>) -> Prop {
        let args: Vec<NTerm> = match atom {
            NAtom::Pred(_, args) => args.clone(),
            NAtom::Eq(a, b) => vec![*a, *b],
        };
        let cands: Vec<Vec<(usize, Option<Lit>)>> = args.iter().map(|&t| self.candidates(t, env)).collect();
        if cands.iter().all(|c| c.len() == 1 && c[0].1.is_none()) {
            let elems: Vec<usize> = cands.iter().map(|c| c[0].0).collect();
            return match atom {
                NAtom::Pred(p, _) => Prop::Lit(self.atom_lit(*p, elems)),
                NAtom::Eq(..) => {
                    if elems[0] == elems[1] {
                        Prop::True
                    } else {
                        Prop::False
                    }
                }
            };
        }
        if let NAtom::Eq(..) = atom {
            // element against constant: the denotation literal itself
            for (fixed, other) in [(0, 1), (1, 0)] {
                if cands[fixed].len() == 1 && cands[fixed][0].1.is_none() {
                    let e = cands[fixed][0].0;
                    return match cands[other].iter().find(|(x, _)| *x == e) {
                        Some((_, Some(l))) => Prop::Lit(*l),
                        Some((_, None)) => Prop::True,
                        None => Prop::False,
                    };
                }
            }
        }
        let key = match atom {
            NAtom::Pred(p, _) => NAtom::Pred(
                *p,
                args.iter()
                    .map(|&t| match t {
                        NTerm::Var(v) => NTerm::Var(env[&v] as u32),
                        c => c,
                    })
                    .collect(),
            ),
            NAtom::Eq(..) => {
                let norm = |t: NTerm| match t {
                    NTerm::Var(v) => NTerm::Var(env[&v] as u32),
                    c => c,
                };
                NAtom::Eq(norm(args[0]), norm(args[1]))
            }
        };
        if let Some(&l) = self.const_atoms.get(&key) {
            return Prop::Lit(l);
        }
        let aux = self.solver.new_lit();
        // every combination of denotations pins the aux literal to a concrete value
        let mut combo: Vec<usize> = vec![0; cands.len()];
        loop {
            let mut guard: Vec<Lit> = Vec::new();
            let mut elems = Vec::with_capacity(cands.len());
            for (k, &i) in combo.iter().enumerate() {
                let (e, l) = cands[k][i];
                elems.push(e);
                if let Some(l) = l {
                    guard.push(!l);
                }
            }
            let value = match atom {
                NAtom::Pred(p, _) => Prop::Lit(self.atom_lit(*p, elems)),
                NAtom::Eq(..) => {
                    if elems[0] == elems[1] {
                        Prop::True
                    } else {
                        Prop::False
                    }
                }
            };
            match value {
                Prop::Lit(v) => {
                    let mut c1 = guard.clone();
                    c1.extend([!aux, v]);
                    self.solver.add_clause(&c1);
                    let mut c2 = guard;
                    c2.extend([aux, !v]);
                    self.solver.add_clause(&c2);
                }
                Prop::True => {
                    guard.push(aux);
                    self.solver.add_clause(&guard);
                }
                _ => {
                    guard.push(!aux);
                    self.solver.add_clause(&guard);
                }
            }
            let mut k = 0;
            loop {
                if k == combo.len() {
                    self.const_atoms.insert(key, aux);
                    return Prop::Lit(aux);
                }
                combo[k] += 1;
                if combo[k] < cands[k].len() {
                    break;
                }
                combo[k] = 0;
                k += 1;
            }
        }
    }

    fn ground(&mut self, f: &Nnf, env: &mut HashMap<u32, usize>) -> Prop {
        match f {
            Nnf::True => Prop::True,
            Nnf::False => Prop::False,
            Nnf::Lit(pos, atom) => match self.ground_atom(atom, env) {
                Prop::Lit(l) => Prop::lit(l, *pos),
                Prop::True if *pos => Prop::True,
                Prop::False if !*pos => Prop::True,
                _ => Prop::False,
            },
            Nnf::And(xs) => {
                let parts = xs.iter().map(|x| self.ground(x, env)).collect();
                Prop::and(parts)
            }
            Nnf::Or(xs) => {
                let parts = xs.iter().map(|x| self.ground(x, env)).collect();
                Prop::or(parts)
            }
            Nnf::All(v, body) | Nnf::Ex(v, body) => {
                let universal = matches!(f, Nnf::All(..));
                let mut parts = Vec::with_capacity(self.size);
                for e in 0..self.size {
                    env.insert(*v, e);
                    let inner = self.ground(body, env);
                    parts.push(match (self.active[e], universal) {
                        (None, _) => inner,
                        (Some(a), true) => Prop::or(vec![Prop::Lit(!a), inner]),
                        (Some(a), false) => Prop::and(vec![Prop::Lit(a), inner]),
                    });
                }
                env.remove(v);
                if universal {
                    Prop::and(parts)
                } else {
                    Prop::or(parts)
                }
            }
        }
    }

    fn encode(&mut self, p: Prop) -> Lit {
        match p {
            Prop::True => self.truth,
            Prop::False => !self.truth,
            Prop::Lit(l) => l,
            Prop::And(xs) => {
                let v = self.solver.new_lit();
                for x in xs {
                    let l = self.encode(x);
                    self.solver.add_clause(&[!v, l]);
                }
                v
            }
            Prop::Or(xs) => {
                let v = self.solver.new_lit();
                let mut clause = vec![!v];
                for x in xs {
                    clause.push(self.encode(x));
                }
                self.solver.add_clause(&clause);
                v
            }
        }
    }

    fn assert_under(&mut self, selector: Lit, p: Prop) {
        match p {
            Prop::And(xs) => {
                for x in xs {
                    self.assert_under(selector, x);
                }
            }
            Prop::Or(xs) => {
                let mut clause = vec![!selector];
                for x in xs {
                    clause.push(self.encode(x));
                }
                self.solver.add_clause(&clause);
            }
            p => {
                let l = self.encode(p);
                self.solver.add_clause(&[!selector, l]);
            }
        }
    }

    /// Checks the conjunction of the formulas at `indices`.
    pub fn check(&mut self, indices: &[usize], want_witness: bool) -> Verdict {
        let assumptions: Vec<Lit> = indices.iter().map(|&i| self.selectors[i]).collect();
        self.solver.assume(&assumptions);
        let sat = self.solver.solve().expect("solver is not interrupted");
        if sat {
            self.core = None;
            let witness = want_witness.then(|| self.extract_model());
            Verdict {
                status: SatStatus::Sat,
                witness,
                source: Source::Internal,
            }
        } else {
            let failed: BTreeSet<Lit> = self.solver.failed_core().unwrap_or(&[]).iter().copied().collect();
            self.core = Some(
                indices
                    .iter()
                    .copied()
                    .filter(|&i| failed.contains(&self.selectors[i]))
                    .collect(),
            );
            let status = if self.completeness.is_complete() {
                SatStatus::Unsat
            } else {
                SatStatus::Unknown
            };
            Verdict {
                status,
                witness: None,
                source: Source::Internal,
            }
        }
    }

    /// Subset of the last refuted indices that already suffices for unsatisfiability.
    pub fn last_core(&self) -> Option<&[usize]> {
        self.core.as_deref()
    }

    fn extract_model(&self) -> FiniteModel {
        let values: BTreeSet<Lit> = self.solver.model().unwrap_or_default().into_iter().collect();
        let is_true = |l: Lit| values.contains(&l);
        let size = self.active.iter().take_while(|a| a.is_none_or(is_true)).count();
        let mut model = FiniteModel {
            size,
            constants: BTreeMap::new(),
            relations: BTreeMap::new(),
        };
        for (j, d) in self.denotations.iter().enumerate().take(self.user_consts) {
            let e = match d {
                Denotation::Fixed(e) => *e,
                Denotation::Choice(c) => c.iter().find(|(_, l)| is_true(*l)).map_or(0, |(e, _)| *e),
            };
            model.constants.insert(self.const_names[j].clone(), e);
        }
        for ((p, args), &l) in &self.atoms {
            if args.iter().all(|&a| a < size) && is_true(l) {
                let name = &self.preds[*p as usize].0;
                model.relations.entry(name.clone()).or_default().insert(args.clone());
            }
        }
        model
    }
}
