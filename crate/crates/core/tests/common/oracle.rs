//! Reference decider for the function-free fragment without existentials
//! under universals. Existentials become Skolem constants, universals are
//! expanded over the resulting Herbrand universe, equality is axiomatized
//! (reflexivity is built in, symmetry by ordering the pair) and the ground
//! problem goes through a plain DPLL with two watched literals.
//!
//! Shares nothing with the library's finder apart from the formula AST.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use unigram::logic::{Formula, Label, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    /// An existential sits below a universal after negation normal form.
    OutsideFragment,
    Inconsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum T {
    Var(usize),
    Const(usize),
}

#[derive(Debug, Clone)]
enum A {
    Pred(String, Vec<T>),
    Eq(T, T),
}

#[derive(Debug, Clone)]
enum N {
    Top,
    Bot,
    Lit(bool, A),
    And(Vec<N>),
    Or(Vec<N>),
    All(usize, Box<N>),
    Ex(usize, Box<N>),
}

#[derive(Default)]
struct Names {
    consts: Vec<String>,
    index: HashMap<String, usize>,
    vars: usize,
}

impl Names {
    fn konst(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.consts.push(name.to_string());
        self.index.insert(name.to_string(), self.consts.len() - 1);
        self.consts.len() - 1
    }
}

fn term(t: &Term, env: &[(String, usize)], names: &mut Names) -> T {
    match t {
        Term::Var(v) => T::Var(env.iter().rev().find(|(n, _)| n == v).expect("free variable").1),
        Term::Const(c) => T::Const(names.konst(c)),
    }
}

fn nnf(f: &Formula, pos: bool, env: &mut Vec<(String, usize)>, names: &mut Names) -> N {
    match f {
        Formula::True => {
            if pos {
                N::Top
            } else {
                N::Bot
            }
        }
        Formula::False => {
            if pos {
                N::Bot
            } else {
                N::Top
            }
        }
        Formula::Atom { pred, args } => {
            let args = args.iter().map(|a| term(a, env, names)).collect();
            N::Lit(pos, A::Pred(pred.clone(), args))
        }
        Formula::Eq(a, b) => N::Lit(pos, A::Eq(term(a, env, names), term(b, env, names))),
        Formula::Not(x) => nnf(x, !pos, env, names),
        Formula::And(xs) | Formula::Or(xs) => {
            let parts = xs.iter().map(|x| nnf(x, pos, env, names)).collect();
            if matches!(f, Formula::And(_)) == pos {
                N::And(parts)
            } else {
                N::Or(parts)
            }
        }
        Formula::Implies(a, b) => {
            let na = nnf(a, !pos, env, names);
            let nb = nnf(b, pos, env, names);
            if pos {
                N::Or(vec![na, nb])
            } else {
                N::And(vec![na, nb])
            }
        }
        Formula::Iff(a, b) | Formula::Xor(a, b) => {
            // a<=>b is (~a|b)&(a|~b); its negation is (a&~b)|(~a&b)
            let iff = matches!(f, Formula::Iff(..)) == pos;
            let (pa, na) = (nnf(a, true, env, names), nnf(a, false, env, names));
            let (pb, nb) = (nnf(b, true, env, names), nnf(b, false, env, names));
            if iff {
                N::And(vec![N::Or(vec![na, pb]), N::Or(vec![pa, nb])])
            } else {
                N::Or(vec![N::And(vec![pa, nb]), N::And(vec![na, pb])])
            }
        }
        Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
            let universal = matches!(f, Formula::Forall(..)) == pos;
            let ids: Vec<usize> = vs
                .iter()
                .map(|v| {
                    names.vars += 1;
                    env.push((v.clone(), names.vars));
                    names.vars
                })
                .collect();
            let mut n = nnf(body, pos, env, names);
            env.truncate(env.len() - vs.len());
            for id in ids.into_iter().rev() {
                n = if universal {
                    N::All(id, Box::new(n))
                } else {
                    N::Ex(id, Box::new(n))
                };
            }
            n
        }
    }
}

fn skolemize(n: &N, under_all: bool, names: &mut Names, sk: &mut HashMap<usize, usize>) -> Result<(), OracleError> {
    match n {
        N::And(xs) | N::Or(xs) => xs.iter().try_for_each(|x| skolemize(x, under_all, names, sk)),
        N::All(_, b) => skolemize(b, true, names, sk),
        N::Ex(v, b) => {
            if under_all {
                return Err(OracleError::OutsideFragment);
            }
            let c = names.konst(&format!("$sk{v}"));
            sk.insert(*v, c);
            skolemize(b, false, names, sk)
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone)]
enum P {
    T,
    F,
    Lit(i32),
    And(Vec<P>),
    Or(Vec<P>),
}

#[derive(Default)]
struct Ground {
    atoms: HashMap<(String, Vec<usize>), i32>,
    eqs: HashMap<(usize, usize), i32>,
    arities: BTreeMap<String, usize>,
    equality: bool,
    nvars: i32,
    clauses: Vec<Vec<i32>>,
}

impl Ground {
    fn fresh(&mut self) -> i32 {
        self.nvars += 1;
        self.nvars
    }

    fn pred(&mut self, p: &str, args: Vec<usize>) -> i32 {
        self.arities.insert(p.to_string(), args.len());
        if let Some(&v) = self.atoms.get(&(p.to_string(), args.clone())) {
            return v;
        }
        let v = self.fresh();
        self.atoms.insert((p.to_string(), args), v);
        v
    }

    fn eq(&mut self, a: usize, b: usize) -> Option<i32> {
        if a == b {
            return None;
        }
        let key = (a.min(b), a.max(b));
        if let Some(&v) = self.eqs.get(&key) {
            return Some(v);
        }
        let v = self.fresh();
        self.eqs.insert(key, v);
        Some(v)
    }

    fn ground(&mut self, n: &N, env: &mut HashMap<usize, usize>, universe: usize) -> P {
        let val = |t: &T, env: &HashMap<usize, usize>| match t {
            T::Const(c) => *c,
            T::Var(v) => env[v],
        };
        match n {
            N::Top => P::T,
            N::Bot => P::F,
            N::Lit(pos, A::Pred(p, args)) => {
                let args = args.iter().map(|a| val(a, env)).collect();
                let v = self.pred(p, args);
                P::Lit(if *pos { v } else { -v })
            }
            N::Lit(pos, A::Eq(a, b)) => {
                self.equality = true;
                match self.eq(val(a, env), val(b, env)) {
                    None => {
                        if *pos {
                            P::T
                        } else {
                            P::F
                        }
                    }
                    Some(v) => P::Lit(if *pos { v } else { -v }),
                }
            }
            N::And(xs) => P::And(xs.iter().map(|x| self.ground(x, env, universe)).collect()),
            N::Or(xs) => P::Or(xs.iter().map(|x| self.ground(x, env, universe)).collect()),
            N::All(v, b) => P::And(
                (0..universe)
                    .map(|c| {
                        env.insert(*v, c);
                        let g = self.ground(b, env, universe);
                        env.remove(v);
                        g
                    })
                    .collect(),
            ),
            N::Ex(..) => unreachable!("existentials are replaced before grounding"),
        }
    }

    /// Literal equivalent to `p` in the positive direction (Plaisted-Greenbaum).
    fn encode(&mut self, p: P) -> Option<i32> {
        match p {
            P::T => None,
            P::F => {
                let v = self.fresh();
                self.clauses.push(vec![-v]);
                Some(v)
            }
            P::Lit(l) => Some(l),
            P::And(xs) => {
                let v = self.fresh();
                for x in xs {
                    if let Some(l) = self.encode(x) {
                        self.clauses.push(vec![-v, l]);
                    }
                }
                Some(v)
            }
            P::Or(xs) => {
                let mut lits = Vec::with_capacity(xs.len());
                for x in xs {
                    lits.push(self.encode(x)?);
                }
                let v = self.fresh();
                lits.insert(0, -v);
                self.clauses.push(lits);
                Some(v)
            }
        }
    }

    fn equality_axioms(&mut self, universe: usize) {
        if !self.equality {
            return;
        }
        for a in 0..universe {
            for b in 0..universe {
                for c in 0..universe {
                    if a != b && b != c && a != c {
                        let (ab, bc, ac) = (self.eq(a, b).unwrap(), self.eq(b, c).unwrap(), self.eq(a, c).unwrap());
                        self.clauses.push(vec![-ab, -bc, ac]);
                    }
                }
            }
        }
        let arities: Vec<(String, usize)> = self.arities.iter().map(|(p, &k)| (p.clone(), k)).collect();
        for (p, k) in arities {
            for args in tuples(universe, k) {
                let from = self.pred(&p, args.clone());
                for j in 0..k {
                    for b in 0..universe {
                        if b == args[j] {
                            continue;
                        }
                        let mut moved = args.clone();
                        moved[j] = b;
                        let to = self.pred(&p, moved);
                        let e = self.eq(args[j], b).unwrap();
                        self.clauses.push(vec![-e, -from, to]);
                    }
                }
            }
        }
    }
}

fn tuples(universe: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..universe).map(move |c| {
                    let mut t = t.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    out
}

/// Satisfiability of the conjunction of `formulas`.
pub fn satisfiable(formulas: &[&Formula]) -> Result<bool, OracleError> {
    let mut names = Names::default();
    let nnfs: Vec<N> = formulas
        .iter()
        .map(|f| nnf(f, true, &mut Vec::new(), &mut names))
        .collect();
    let mut sk = HashMap::new();
    for n in &nnfs {
        skolemize(n, false, &mut names, &mut sk)?;
    }
    if names.consts.is_empty() {
        names.konst("$e");
    }
    let universe = names.consts.len();
    let mut g = Ground::default();
    for n in &nnfs {
        let mut env = sk.clone();
        let p = ground_ex(&mut g, n, &mut env, universe);
        if let Some(l) = g.encode(p) {
            g.clauses.push(vec![l]);
        }
    }
    g.equality_axioms(universe);
    Ok(dpll(g.nvars as usize, &g.clauses))
}

// Existentials outside universals are already bound to their Skolem constant
// in `env`, so grounding just looks through them.
fn ground_ex(g: &mut Ground, n: &N, env: &mut HashMap<usize, usize>, universe: usize) -> P {
    match n {
        N::Ex(_, b) => ground_ex(g, b, env, universe),
        N::And(xs) => P::And(xs.iter().map(|x| ground_ex(g, x, env, universe)).collect()),
        N::Or(xs) => P::Or(xs.iter().map(|x| ground_ex(g, x, env, universe)).collect()),
        other => g.ground(other, env, universe),
    }
}

pub fn negate(f: &Formula) -> Formula {
    Formula::Not(Box::new(f.clone()))
}

/// Entailment when premises and the negated hypothesis have no model,
/// contradiction when premises and the hypothesis have none.
pub fn label(premises: &[Formula], hypothesis: &Formula) -> Result<Label, OracleError> {
    let ps: Vec<&Formula> = premises.iter().collect();
    if !satisfiable(&ps)? {
        return Err(OracleError::Inconsistent);
    }
    let neg = negate(hypothesis);
    let with = |h: &Formula| {
        let mut v = ps.clone();
        v.push(h);
        satisfiable(&v)
    };
    if !with(&neg)? {
        Ok(Label::Entailment)
    } else if !with(hypothesis)? {
        Ok(Label::Contradiction)
    } else {
        Ok(Label::Neutral)
    }
}

/// True when `used` keeps the label and dropping any one member loses it.
pub fn deletion_minimal(
    premises: &[Formula],
    hypothesis: &Formula,
    label: Label,
    used: &[usize],
) -> Result<bool, OracleError> {
    let target = match label {
        Label::Entailment => negate(hypothesis),
        Label::Contradiction => hypothesis.clone(),
        Label::Neutral => return Ok(used.is_empty()),
    };
    let unsat = |skip: Option<usize>| {
        let mut v: Vec<&Formula> = used
            .iter()
            .filter(|&&i| Some(i) != skip)
            .map(|&i| &premises[i])
            .collect();
        v.push(&target);
        satisfiable(&v).map(|s| !s)
    };
    if !unsat(None)? {
        return Ok(false);
    }
    for &i in used {
        if unsat(Some(i))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All predicates unary, equality allowed.
pub fn is_monadic(formulas: &[Formula]) -> bool {
    formulas.iter().all(|f| f.predicates().iter().all(|(_, k)| *k <= 1))
}

/// DPLL with two watched literals and chronological backtracking.
pub fn dpll(nvars: usize, clauses: &[Vec<i32>]) -> bool {
    let code = |l: i32| (l.unsigned_abs() as usize - 1) * 2 + usize::from(l < 0);
    let mut value = vec![0i8; nvars + 1];
    let mut watches: Vec<Vec<usize>> = vec![Vec::new(); 2 * nvars];
    let mut cls: Vec<Vec<i32>> = Vec::new();
    let mut trail: Vec<i32> = Vec::new();
    let lit_val = |value: &[i8], l: i32| value[l.unsigned_abs() as usize] * if l > 0 { 1 } else { -1 };

    let mut occurrences = vec![0usize; nvars + 1];
    for c in clauses {
        let mut c: Vec<i32> = c.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        if c.iter().any(|&l| c.contains(&-l)) {
            continue;
        }
        for &l in &c {
            occurrences[l.unsigned_abs() as usize] += 1;
        }
        match c.len() {
            0 => return false,
            1 => match lit_val(&value, c[0]) {
                1 => {}
                -1 => return false,
                _ => {
                    value[c[0].unsigned_abs() as usize] = if c[0] > 0 { 1 } else { -1 };
                    trail.push(c[0]);
                }
            },
            _ => {
                c.sort_by_key(|l| std::cmp::Reverse(lit_val(&value, *l)));
                watches[code(c[0])].push(cls.len());
                watches[code(c[1])].push(cls.len());
                cls.push(c);
            }
        }
    }
    let mut order: Vec<usize> = (1..=nvars).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(occurrences[v]));

    // (trail length before the decision, decision literal, already flipped)
    let mut decisions: Vec<(usize, i32, bool)> = Vec::new();
    let mut head = 0;
    loop {
        // propagate
        let mut conflict = false;
        while head < trail.len() && !conflict {
            let falsified = -trail[head];
            head += 1;
            let mut ws = std::mem::take(&mut watches[code(falsified)]);
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                let c = &mut cls[ci];
                if c[0] == falsified {
                    c.swap(0, 1);
                }
                if lit_val(&value, c[0]) == 1 {
                    i += 1;
                    continue;
                }
                if let Some(k) = (2..c.len()).find(|&k| lit_val(&value, c[k]) != -1) {
                    c.swap(1, k);
                    watches[code(c[1])].push(ci);
                    ws.swap_remove(i);
                    continue;
                }
                match lit_val(&value, c[0]) {
                    0 => {
                        value[c[0].unsigned_abs() as usize] = if c[0] > 0 { 1 } else { -1 };
                        trail.push(c[0]);
                    }
                    _ => {
                        conflict = true;
                        break;
                    }
                }
                i += 1;
            }
            watches[code(falsified)].extend(ws);
        }
        if conflict {
            loop {
                let Some((len, lit, flipped)) = decisions.pop() else {
                    return false;
                };
                for l in trail.drain(len..) {
                    value[l.unsigned_abs() as usize] = 0;
                }
                head = len;
                if !flipped {
                    value[lit.unsigned_abs() as usize] = if lit > 0 { -1 } else { 1 };
                    trail.push(-lit);
                    decisions.push((len, -lit, true));
                    break;
                }
            }
            continue;
        }
        let Some(&v) = order.iter().find(|&&v| value[v] == 0) else {
            return true;
        };
        decisions.push((trail.len(), -(v as i32), false));
        value[v] = -1;
        trail.push(-(v as i32));
    }
}
