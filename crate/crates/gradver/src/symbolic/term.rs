//! Symbolic terms: literals, symbolic values, and operator applications.
//!
//! Terms are immutable reference-counted trees. Construction does constant
//! folding on literal operands but no other rewriting, so a term's shape
//! stays close to the source expression that produced it.

use crate::ast::BinOp;
use std::fmt;
use std::rc::Rc;

/// A symbolic value ν. Plain index into the per-verification fresh counter.
pub type SymVal = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lit {
    Int(i64),
    Bool(bool),
    Char(char),
    Null,
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lit::Int(n) => write!(f, "{}", n),
            Lit::Bool(b) => write!(f, "{}", b),
            Lit::Char(c) => write!(f, "'{}'", c.escape_default()),
            Lit::Null => write!(f, "null"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Lit(Lit),
    Sym(SymVal),
    Not(Rc<Term>),
    And(Rc<Term>, Rc<Term>),
    Or(Rc<Term>, Rc<Term>),
    Bin(BinOp, Rc<Term>, Rc<Term>),
}

impl Term {
    pub fn t_true() -> Term {
        Term::Lit(Lit::Bool(true))
    }

    pub fn t_false() -> Term {
        Term::Lit(Lit::Bool(false))
    }

    pub fn null() -> Term {
        Term::Lit(Lit::Null)
    }

    pub fn int(n: i64) -> Term {
        Term::Lit(Lit::Int(n))
    }

    pub fn sym(v: SymVal) -> Term {
        Term::Sym(v)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Term::Lit(Lit::Bool(true)))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Term::Lit(Lit::Bool(false)))
    }

    pub fn not(t: Term) -> Term {
        match &t {
            Term::Lit(Lit::Bool(b)) => Term::Lit(Lit::Bool(!b)),
            Term::Not(inner) => (**inner).clone(),
            _ => Term::Not(Rc::new(t)),
        }
    }

    pub fn and(a: Term, b: Term) -> Term {
        if a.is_true() {
            return b;
        }
        if b.is_true() {
            return a;
        }
        if a.is_false() || b.is_false() {
            return Term::t_false();
        }
        Term::And(Rc::new(a), Rc::new(b))
    }

    pub fn or(a: Term, b: Term) -> Term {
        if a.is_false() {
            return b;
        }
        if b.is_false() {
            return a;
        }
        if a.is_true() || b.is_true() {
            return Term::t_true();
        }
        Term::Or(Rc::new(a), Rc::new(b))
    }

    pub fn bin(op: BinOp, a: Term, b: Term) -> Term {
        if let (Term::Lit(la), Term::Lit(lb)) = (&a, &b) {
            if let Some(lit) = fold(op, *la, *lb) {
                return Term::Lit(lit);
            }
        }
        if op == BinOp::Eq && a == b {
            return Term::t_true();
        }
        Term::Bin(op, Rc::new(a), Rc::new(b))
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::bin(BinOp::Eq, a, b)
    }

    /// All symbolic values appearing in the term.
    pub fn syms(&self, out: &mut std::collections::BTreeSet<SymVal>) {
        match self {
            Term::Lit(_) => {}
            Term::Sym(v) => {
                out.insert(*v);
            }
            Term::Not(a) => a.syms(out),
            Term::And(a, b) | Term::Or(a, b) | Term::Bin(_, a, b) => {
                a.syms(out);
                b.syms(out);
            }
        }
    }
}

fn fold(op: BinOp, a: Lit, b: Lit) -> Option<Lit> {
    use BinOp::*;
    Some(match (op, a, b) {
        (Add, Lit::Int(x), Lit::Int(y)) => Lit::Int(x.wrapping_add(y)),
        (Sub, Lit::Int(x), Lit::Int(y)) => Lit::Int(x.wrapping_sub(y)),
        (Mul, Lit::Int(x), Lit::Int(y)) => Lit::Int(x.wrapping_mul(y)),
        (Div, Lit::Int(x), Lit::Int(y)) if y != 0 => Lit::Int(x.wrapping_div(y)),
        (Div, ..) => return None,
        (Eq, x, y) => Lit::Bool(x == y),
        (Ne, x, y) => Lit::Bool(x != y),
        (Lt, Lit::Int(x), Lit::Int(y)) => Lit::Bool(x < y),
        (Le, Lit::Int(x), Lit::Int(y)) => Lit::Bool(x <= y),
        (Gt, Lit::Int(x), Lit::Int(y)) => Lit::Bool(x > y),
        (Ge, Lit::Int(x), Lit::Int(y)) => Lit::Bool(x >= y),
        _ => return None,
    })
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Lit(l) => write!(f, "{}", l),
            Term::Sym(v) => write!(f, "ν{}", v),
            Term::Not(a) => write!(f, "!({})", a),
            Term::And(a, b) => write!(f, "({} && {})", a, b),
            Term::Or(a, b) => write!(f, "({} || {})", a, b),
            Term::Bin(op, a, b) => write!(f, "({} {} {})", a, op, b),
        }
    }
}

/// Allocator for fresh symbolic values.
#[derive(Debug, Default, Clone)]
pub struct Fresh {
    next: SymVal,
}

impl Fresh {
    pub fn new() -> Self {
        Fresh { next: 0 }
    }

    pub fn fresh(&mut self) -> SymVal {
        let v = self.next;
        self.next += 1;
        v
    }

    pub fn count(&self) -> u32 {
        self.next
    }
}
