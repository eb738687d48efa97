//! TPTP first-order form: AST, parser, printer and token-level statistics.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at byte {offset}: {message}")]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom {
        pred: String,
        args: Vec<Term>,
    },
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// `<~>`; kept as its own node so that scans can tell it apart from a
    /// negated biconditional. Evaluation treats it as `~(a <=> b)`.
    Xor(Box<Formula>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
}

impl Formula {
    pub fn atom(pred: &str, args: &[&str]) -> Formula {
        Formula::Atom {
            pred: pred.to_string(),
            args: args
                .iter()
                .map(|a| {
                    if a.starts_with(|c: char| c.is_ascii_uppercase()) {
                        Term::Var(a.to_string())
                    } else {
                        Term::Const(a.to_string())
                    }
                })
                .collect(),
        }
    }

    pub fn negate(&self) -> Formula {
        Formula::Not(Box::new(self.clone()))
    }

    /// Predicate and constant names, excluding variables.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom { pred, args } => {
                out.insert(pred.clone());
                for a in args {
                    if let Term::Const(c) = a {
                        out.insert(c.clone());
                    }
                }
            }
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
            _ => {}
        });
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            let terms: Vec<&Term> = match f {
                Formula::Atom { args, .. } => args.iter().collect(),
                Formula::Eq(a, b) => vec![a, b],
                _ => vec![],
            };
            for t in terms {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        });
        out
    }

    /// Predicate symbols with their arities.
    pub fn predicates(&self) -> BTreeSet<(String, usize)> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom { pred, args } = f {
                out.insert((pred.clone(), args.len()));
            }
        });
        out
    }

    pub fn has_equality(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, Formula::Eq(..)));
        found
    }

    /// Variables occurring free.
    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            let mut term = |t: &Term, bound: &Vec<String>| {
                if let Term::Var(v) = t {
                    if !bound.contains(v) {
                        out.insert(v.clone());
                    }
                }
            };
            match f {
                Formula::True | Formula::False => {}
                Formula::Atom { args, .. } => args.iter().for_each(|a| term(a, bound)),
                Formula::Eq(a, b) => {
                    term(a, bound);
                    term(b, bound);
                }
                Formula::Not(x) => go(x, bound, out),
                Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| go(x, bound, out)),
                Formula::Implies(a, b) | Formula::Iff(a, b) | Formula::Xor(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
                    let n = bound.len();
                    bound.extend(vs.iter().cloned());
                    go(body, bound, out);
                    bound.truncate(n);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(x) | Formula::Forall(_, x) | Formula::Exists(_, x) => x.visit(f),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.visit(f)),
            Formula::Implies(a, b) | Formula::Iff(a, b) | Formula::Xor(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    fn is_binary(&self) -> bool {
        matches!(
            self,
            Formula::And(_) | Formula::Or(_) | Formula::Implies(..) | Formula::Iff(..) | Formula::Xor(..)
        )
    }

    /// Equality atoms print infix and need parentheses under `~`.
    fn is_unitary(&self) -> bool {
        !self.is_binary() && !matches!(self, Formula::Eq(..))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(x: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if x.is_binary() {
                write!(f, "({x})")
            } else {
                write!(f, "{x}")
            }
        }
        fn infix(f: &mut fmt::Formatter<'_>, op: &str, a: &Formula, b: &Formula) -> fmt::Result {
            operand(a, f)?;
            f.write_str(op)?;
            operand(b, f)
        }
        match self {
            Formula::True => f.write_str("$true"),
            Formula::False => f.write_str("$false"),
            Formula::Atom { pred, args } => {
                f.write_str(pred)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
            Formula::Eq(a, b) => write!(f, "{a}={b}"),
            Formula::Not(x) => {
                if x.is_unitary() {
                    write!(f, "~{x}")
                } else {
                    write!(f, "~({x})")
                }
            }
            Formula::And(xs) | Formula::Or(xs) => {
                let op = if matches!(self, Formula::And(_)) { "&" } else { "|" };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    operand(x, f)?;
                }
                Ok(())
            }
            Formula::Implies(a, b) => infix(f, "=>", a, b),
            Formula::Iff(a, b) => infix(f, "<=>", a, b),
            Formula::Xor(a, b) => infix(f, "<~>", a, b),
            Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
                let q = if matches!(self, Formula::Forall(..)) { '!' } else { '?' };
                write!(f, "{q}[{}]:", vs.join(","))?;
                if body.is_unitary() {
                    write!(f, "{body}")
                } else {
                    write!(f, "({body})")
                }
            }
        }
    }
}

/// Counts of logical-operator tokens, in the order of [`OperatorCounts::NAMES`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperatorCounts(pub [u32; 9]);

impl OperatorCounts {
    pub const NAMES: [&'static str; 9] = ["forall", "exists", "not", "and", "or", "implies", "iff", "xor", "eq"];
    pub const FORALL: usize = 0;
    pub const EXISTS: usize = 1;
    pub const NOT: usize = 2;
    pub const AND: usize = 3;
    pub const OR: usize = 4;
    pub const IMPLIES: usize = 5;
    pub const IFF: usize = 6;
    pub const XOR: usize = 7;
    pub const EQ: usize = 8;

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&mut self, other: &OperatorCounts) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

/// Scans `text` and counts connective, quantifier and equality tokens.
pub fn operator_counts(text: &str) -> Result<OperatorCounts, SyntaxError> {
    let mut counts = OperatorCounts::default();
    for (tok, _) in lex(text)? {
        let slots: &[usize] = match tok {
            Tok::Bang => &[OperatorCounts::FORALL],
            Tok::Question => &[OperatorCounts::EXISTS],
            Tok::Tilde => &[OperatorCounts::NOT],
            Tok::And => &[OperatorCounts::AND],
            Tok::Or => &[OperatorCounts::OR],
            Tok::Implies | Tok::ImpliedBy => &[OperatorCounts::IMPLIES],
            Tok::Iff => &[OperatorCounts::IFF],
            Tok::Xor => &[OperatorCounts::XOR],
            Tok::Eq => &[OperatorCounts::EQ],
            Tok::Neq => &[OperatorCounts::NOT, OperatorCounts::EQ],
            Tok::Nand => &[OperatorCounts::NOT, OperatorCounts::AND],
            Tok::Nor => &[OperatorCounts::NOT, OperatorCounts::OR],
            _ => &[],
        };
        for &s in slots {
            counts.0[s] += 1;
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Bang,
    Question,
    Tilde,
    And,
    Or,
    Implies,
    ImpliedBy,
    Iff,
    Xor,
    Nand,
    Nor,
    Eq,
    Neq,
    Lower(String),
    Upper(String),
    Dollar(String),
    Eof,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let rest = &text[i..];
        let (tok, len) = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'%' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'(' => (Tok::LParen, 1),
            b')' => (Tok::RParen, 1),
            b'[' => (Tok::LBracket, 1),
            b']' => (Tok::RBracket, 1),
            b',' => (Tok::Comma, 1),
            b':' => (Tok::Colon, 1),
            b'.' => (Tok::Dot, 1),
            b'&' => (Tok::And, 1),
            b'|' => (Tok::Or, 1),
            b'?' => (Tok::Question, 1),
            b'!' if rest.starts_with("!=") => (Tok::Neq, 2),
            b'!' => (Tok::Bang, 1),
            b'~' if rest.starts_with("~&") => (Tok::Nand, 2),
            b'~' if rest.starts_with("~|") => (Tok::Nor, 2),
            b'~' => (Tok::Tilde, 1),
            b'=' if rest.starts_with("=>") => (Tok::Implies, 2),
            b'=' => (Tok::Eq, 1),
            b'<' if rest.starts_with("<=>") => (Tok::Iff, 3),
            b'<' if rest.starts_with("<~>") => (Tok::Xor, 3),
            b'<' if rest.starts_with("<=") => (Tok::ImpliedBy, 2),
            b'$' | b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                let word = text[i..j].to_string();
                let tok = match c {
                    b'$' => Tok::Dollar(word),
                    b'A'..=b'Z' => Tok::Upper(word),
                    _ => Tok::Lower(word),
                };
                (tok, j - i)
            }
            b'\'' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j] != b'\'' {
                    if bytes[j] == b'\\' {
                        j += 1;
                    }
                    j += 1;
                }
                if j >= bytes.len() {
                    return Err(SyntaxError {
                        offset: start,
                        message: "unterminated quoted atom".into(),
                    });
                }
                (Tok::Lower(text[i..=j].to_string()), j + 1 - i)
            }
            _ => {
                return Err(SyntaxError {
                    offset: start,
                    message: format!("unexpected character `{}`", rest.chars().next().unwrap()),
                })
            }
        };
        out.push((tok, start));
        i += len;
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, SyntaxError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let first = self.unitary()?;
        match self.peek().clone() {
            Tok::And | Tok::Or => {
                let op = self.peek().clone();
                let mut parts = vec![first];
                while *self.peek() == op {
                    self.bump();
                    parts.push(self.unitary()?);
                }
                if matches!(
                    self.peek(),
                    Tok::And | Tok::Or | Tok::Implies | Tok::ImpliedBy | Tok::Iff | Tok::Xor | Tok::Nand | Tok::Nor
                ) {
                    return self.error("mixed binary connectives need parentheses");
                }
                Ok(if op == Tok::And {
                    Formula::And(parts)
                } else {
                    Formula::Or(parts)
                })
            }
            op @ (Tok::Implies | Tok::ImpliedBy | Tok::Iff | Tok::Xor | Tok::Nand | Tok::Nor) => {
                self.bump();
                let second = self.unitary()?;
                if matches!(
                    self.peek(),
                    Tok::And | Tok::Or | Tok::Implies | Tok::ImpliedBy | Tok::Iff | Tok::Xor | Tok::Nand | Tok::Nor
                ) {
                    return self.error("non-associative connective needs parentheses");
                }
                let (a, b) = (Box::new(first), Box::new(second));
                Ok(match op {
                    Tok::Implies => Formula::Implies(a, b),
                    Tok::ImpliedBy => Formula::Implies(b, a),
                    Tok::Iff => Formula::Iff(a, b),
                    Tok::Xor => Formula::Xor(a, b),
                    Tok::Nand => Formula::Not(Box::new(Formula::And(vec![*a, *b]))),
                    _ => Formula::Not(Box::new(Formula::Or(vec![*a, *b]))),
                })
            }
            _ => Ok(first),
        }
    }

    fn unitary(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(Formula::Not(Box::new(self.unitary()?)))
            }
            Tok::Bang | Tok::Question => {
                let universal = self.bump() == Tok::Bang;
                self.expect(Tok::LBracket, "`[` after quantifier")?;
                let mut vars = Vec::new();
                loop {
                    match self.bump() {
                        Tok::Upper(v) => vars.push(v),
                        _ => {
                            self.pos -= 1;
                            return self.error("expected a variable");
                        }
                    }
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RBracket => {
                            self.bump();
                            break;
                        }
                        _ => return self.error("expected `,` or `]`"),
                    }
                }
                self.expect(Tok::Colon, "`:` after quantified variables")?;
                let body = Box::new(self.unitary()?);
                Ok(if universal {
                    Formula::Forall(vars, body)
                } else {
                    Formula::Exists(vars, body)
                })
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            _ => self.atomic(),
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.bump() {
            Tok::Upper(v) => Ok(Term::Var(v)),
            Tok::Lower(c) => {
                if *self.peek() == Tok::LParen {
                    return self.error("function terms are not supported");
                }
                Ok(Term::Const(c))
            }
            _ => {
                self.pos -= 1;
                self.error("expected a term")
            }
        }
    }

    fn atomic(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek().clone() {
            Tok::Dollar(w) if w == "$true" || w == "$false" => {
                self.bump();
                Ok(if w == "$true" { Formula::True } else { Formula::False })
            }
            Tok::Lower(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = vec![self.term()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen, "`)` closing the argument list")?;
                    if matches!(self.peek(), Tok::Eq | Tok::Neq) {
                        return self.error("function terms are not supported");
                    }
                    return Ok(Formula::Atom { pred: name, args });
                }
                if matches!(self.peek(), Tok::Eq | Tok::Neq) {
                    return self.equality(Term::Const(name));
                }
                Ok(Formula::Atom {
                    pred: name,
                    args: vec![],
                })
            }
            Tok::Upper(v) => {
                self.bump();
                self.equality(Term::Var(v))
            }
            Tok::Eof => self.error("unexpected end of input"),
            _ => self.error("expected a formula"),
        }
    }

    fn equality(&mut self, left: Term) -> Result<Formula, SyntaxError> {
        let negated = match self.bump() {
            Tok::Eq => false,
            Tok::Neq => true,
            _ => {
                self.pos -= 1;
                return self.error("expected `=` or `!=`");
            }
        };
        let right = self.term()?;
        let eq = Formula::Eq(left, right);
        Ok(if negated { Formula::Not(Box::new(eq)) } else { eq })
    }

    fn unit(&mut self) -> Result<FofUnit, SyntaxError> {
        match self.bump() {
            Tok::Lower(w) if w == "fof" => {}
            _ => {
                self.pos -= 1;
                return self.error("expected `fof`");
            }
        }
        self.expect(Tok::LParen, "`(`")?;
        let name = match self.bump() {
            Tok::Lower(n) | Tok::Upper(n) => n,
            _ => {
                self.pos -= 1;
                return self.error("expected a unit name");
            }
        };
        self.expect(Tok::Comma, "`,`")?;
        let role = match self.bump() {
            Tok::Lower(r) => r,
            _ => {
                self.pos -= 1;
                return self.error("expected a role");
            }
        };
        self.expect(Tok::Comma, "`,`")?;
        let formula = self.formula()?;
        if *self.peek() == Tok::Comma {
            // annotations are skipped
            let mut depth = 0;
            loop {
                match self.peek() {
                    Tok::LParen | Tok::LBracket => depth += 1,
                    Tok::RParen if depth == 0 => break,
                    Tok::RParen | Tok::RBracket => depth -= 1,
                    Tok::Eof => return self.error("unterminated annotation"),
                    _ => {}
                }
                self.bump();
            }
        }
        self.expect(Tok::RParen, "`)` closing the unit")?;
        self.expect(Tok::Dot, "`.` after the unit")?;
        Ok(FofUnit { name, role, formula })
    }
}

/// One `fof(name, role, formula).` annotated formula.
#[derive(Debug, Clone, PartialEq)]
pub struct FofUnit {
    pub name: String,
    pub role: String,
    pub formula: Formula,
}

impl fmt::Display for FofUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fof({}, {}, {}).", self.name, self.role, self.formula)
    }
}

/// Parses a bare formula or a single `fof(...)` unit.
pub fn parse_fof(text: &str) -> Result<Formula, SyntaxError> {
    let mut p = Parser::new(text)?;
    let f = if matches!(p.peek(), Tok::Lower(w) if w == "fof") && p.toks.get(1).map(|t| &t.0) == Some(&Tok::LParen) {
        p.unit()?.formula
    } else {
        p.formula()?
    };
    if *p.peek() != Tok::Eof {
        return p.error("unexpected trailing input");
    }
    Ok(f)
}

/// Parses a whole TPTP problem made of `fof` units and `%` comments.
pub fn parse_tptp(text: &str) -> Result<Vec<FofUnit>, SyntaxError> {
    let mut p = Parser::new(text)?;
    let mut units = Vec::new();
    while *p.peek() != Tok::Eof {
        units.push(p.unit()?);
    }
    Ok(units)
}
