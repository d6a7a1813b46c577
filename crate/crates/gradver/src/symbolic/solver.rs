//! Three-valued satisfiability and entailment for path conditions.
//!
//! The decision procedure enumerates truth assignments to the boolean atoms
//! of the query (there are few of them in practice) and validates each
//! propositionally-satisfying assignment against a small theory: congruence
//! classes with literal values, disequalities, and integer interval bounds.
//! The procedure is sound in the directions callers rely on — `Unsat` (and
//! therefore `Proved`) is only reported when every assignment is genuinely
//! contradictory; incompleteness shows up as `Unknown`, never as a wrong
//! `Unsat`. Queries with arithmetic over unknowns or too many atoms degrade
//! to `Unknown` on the satisfiable side.

use super::term::{Lit, Term};
use crate::ast::BinOp;
use std::collections::HashMap;
use std::rc::Rc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sat {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    Proved,
    Disproved,
    Unknown,
}

const MAX_ATOMS: usize = 12;

/// Is the conjunction of `terms` satisfiable?
pub fn sat(terms: &[Term]) -> Sat {
    let mut atoms = Atoms::default();
    for t in terms {
        if t.is_false() {
            return Sat::Unsat;
        }
        atoms.collect(t);
    }
    let n = atoms.list.len();
    if n > MAX_ATOMS {
        return Sat::Unknown;
    }
    let mut found_sat = false;
    for bits in 0u32..(1u32 << n) {
        let assign = |i: usize| bits & (1 << i) != 0;
        if !terms.iter().all(|t| eval(t, &atoms, &assign)) {
            continue;
        }
        if theory_consistent(&atoms, &assign) {
            if atoms.imperfect {
                found_sat = true; // cannot confirm; keep scanning for nothing better
            } else {
                return Sat::Sat;
            }
        }
    }
    if found_sat {
        Sat::Unknown
    } else {
        Sat::Unsat
    }
}

/// Does the conjunction `pc` entail `goal`?
pub fn implies(pc: &[Term], goal: &Term) -> Truth {
    if goal.is_true() || pc.iter().any(|t| t == goal) {
        return Truth::Proved;
    }
    if goal.is_false() {
        // Entailed only if pc is itself inconsistent.
        return match sat(pc) {
            Sat::Unsat => Truth::Proved,
            Sat::Sat => Truth::Disproved,
            Sat::Unknown => Truth::Unknown,
        };
    }
    let mut with_neg: Vec<Term> = pc.to_vec();
    with_neg.push(Term::not(goal.clone()));
    if sat(&with_neg) == Sat::Unsat {
        return Truth::Proved;
    }
    let mut with_goal: Vec<Term> = pc.to_vec();
    with_goal.push(goal.clone());
    if sat(&with_goal) == Sat::Unsat {
        return Truth::Disproved;
    }
    Truth::Unknown
}

// ---------------------------------------------------------------------------
// Atom collection
// ---------------------------------------------------------------------------

/// A boolean atom is a maximal subterm with no boolean connective at its
/// root: a comparison, or a bare symbolic value in boolean position.
#[derive(Default)]
struct Atoms {
    list: Vec<Term>,
    index: HashMap<Term, usize>,
    /// Set when some atom involves arithmetic over non-literal operands;
    /// the theory check is then incomplete on the satisfiable side.
    imperfect: bool,
}

impl Atoms {
    fn collect(&mut self, t: &Term) {
        match t {
            Term::Lit(_) => {}
            Term::Not(a) => self.collect(a),
            Term::And(a, b) | Term::Or(a, b) => {
                self.collect(a);
                self.collect(b);
            }
            Term::Sym(_) => self.add(t),
            Term::Bin(op, a, b) => {
                if op.is_comparison() {
                    for side in [a, b] {
                        if has_open_arith(side) {
                            self.imperfect = true;
                        }
                    }
                    self.add(t);
                } else {
                    // An arithmetic term in boolean position cannot occur in
                    // well-typed programs; treat it as a free atom.
                    self.imperfect = true;
                    self.add(t);
                }
            }
        }
    }

    fn add(&mut self, t: &Term) {
        if !self.index.contains_key(t) {
            self.index.insert(t.clone(), self.list.len());
            self.list.push(t.clone());
        }
    }
}

/// Arithmetic whose value is not determined by literals alone.
fn has_open_arith(t: &Term) -> bool {
    match t {
        Term::Lit(_) | Term::Sym(_) => false,
        Term::Not(a) => has_open_arith(a),
        Term::And(a, b) | Term::Or(a, b) => has_open_arith(a) || has_open_arith(b),
        Term::Bin(op, a, b) => {
            !op.is_comparison() || has_open_arith(a) || has_open_arith(b)
        }
    }
}

fn eval(t: &Term, atoms: &Atoms, assign: &dyn Fn(usize) -> bool) -> bool {
    match t {
        Term::Lit(Lit::Bool(b)) => *b,
        Term::Lit(_) => false, // non-boolean literal in boolean position: dead
        Term::Not(a) => !eval(a, atoms, assign),
        Term::And(a, b) => eval(a, atoms, assign) && eval(b, atoms, assign),
        Term::Or(a, b) => eval(a, atoms, assign) || eval(b, atoms, assign),
        Term::Sym(_) | Term::Bin(..) => assign(atoms.index[t]),
    }
}

// ---------------------------------------------------------------------------
// Theory check: congruence classes + literal values + interval bounds
// ---------------------------------------------------------------------------

struct Classes {
    parent: Vec<usize>,
    value: Vec<Option<Lit>>,
    terms: HashMap<Term, usize>,
}

impl Classes {
    fn new() -> Self {
        Classes { parent: Vec::new(), value: Vec::new(), terms: HashMap::new() }
    }

    fn node(&mut self, t: &Term) -> usize {
        if let Some(&i) = self.terms.get(t) {
            return i;
        }
        let i = self.parent.len();
        self.parent.push(i);
        self.value.push(if let Term::Lit(l) = t { Some(*l) } else { None });
        self.terms.insert(t.clone(), i);
        i
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let r = self.find(self.parent[i]);
            self.parent[i] = r;
        }
        self.parent[i]
    }

    /// Returns false on conflict (two distinct literals merged).
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        match (self.value[ra], self.value[rb]) {
            (Some(x), Some(y)) if x != y => return false,
            (Some(x), _) => self.value[rb] = Some(x),
            (None, v) => self.value[rb] = v,
        }
        self.parent[ra] = rb;
        true
    }

    fn set_value(&mut self, i: usize, l: Lit) -> bool {
        let r = self.find(i);
        match self.value[r] {
            Some(x) => x == l,
            None => {
                self.value[r] = Some(l);
                true
            }
        }
    }

    fn value_of(&mut self, i: usize) -> Option<Lit> {
        let r = self.find(i);
        self.value[r]
    }
}

fn theory_consistent(atoms: &Atoms, assign: &dyn Fn(usize) -> bool) -> bool {
    // Gather signed facts about comparison atoms.
    let mut eqs: Vec<(Rc<Term>, Rc<Term>)> = Vec::new();
    let mut diseqs: Vec<(Rc<Term>, Rc<Term>)> = Vec::new();
    // (a, b, strict) meaning a < b or a <= b.
    let mut ords: Vec<(Rc<Term>, Rc<Term>, bool)> = Vec::new();
    for (i, atom) in atoms.list.iter().enumerate() {
        let v = assign(i);
        if let Term::Bin(op, a, b) = atom {
            match (op, v) {
                (BinOp::Eq, true) | (BinOp::Ne, false) => eqs.push((a.clone(), b.clone())),
                (BinOp::Eq, false) | (BinOp::Ne, true) => diseqs.push((a.clone(), b.clone())),
                (BinOp::Lt, true) | (BinOp::Ge, false) => ords.push((a.clone(), b.clone(), true)),
                (BinOp::Le, true) | (BinOp::Gt, false) => ords.push((a.clone(), b.clone(), false)),
                (BinOp::Gt, true) | (BinOp::Le, false) => ords.push((b.clone(), a.clone(), true)),
                (BinOp::Ge, true) | (BinOp::Lt, false) => ords.push((b.clone(), a.clone(), false)),
                _ => {} // non-comparison: free atom
            }
        }
    }

    let mut cls = Classes::new();
    for (a, b) in &eqs {
        let (na, nb) = (cls.node(a), cls.node(b));
        if !cls.union(na, nb) {
            return false;
        }
    }
    for (a, b) in &diseqs {
        cls.node(a);
        cls.node(b);
    }
    for (a, b, _) in &ords {
        cls.node(a);
        cls.node(b);
    }

    // Propagate literal values through arithmetic sub-structure.
    let mut changed = true;
    while changed {
        changed = false;
        let known: Vec<(Term, usize)> =
            cls.terms.iter().map(|(t, i)| (t.clone(), *i)).collect();
        for (t, i) in known {
            if cls.value_of(i).is_some() {
                continue;
            }
            if let Term::Bin(op, a, b) = &t {
                if !op.is_comparison() {
                    let mut lit_of = |t: &Term| -> Option<Lit> {
                        if let Term::Lit(l) = t {
                            return Some(*l);
                        }
                        cls.terms.get(t).copied().and_then(|n| cls.value_of(n))
                    };
                    let va = lit_of(a);
                    let vb = lit_of(b);
                    if let (Some(Lit::Int(x)), Some(Lit::Int(y))) = (va, vb) {
                        let r = match op {
                            BinOp::Add => Some(x.wrapping_add(y)),
                            BinOp::Sub => Some(x.wrapping_sub(y)),
                            BinOp::Mul => Some(x.wrapping_mul(y)),
                            BinOp::Div if y != 0 => Some(x.wrapping_div(y)),
                            _ => None,
                        };
                        if let Some(r) = r {
                            if !cls.set_value(i, Lit::Int(r)) {
                                return false;
                            }
                            changed = true;
                        }
                    }
                }
            }
        }
    }

    // Disequalities: same class, or same known value, is a conflict.
    for (a, b) in &diseqs {
        let (na, nb) = (cls.node(a), cls.node(b));
        if cls.find(na) == cls.find(nb) {
            return false;
        }
        if let (Some(x), Some(y)) = (cls.value_of(na), cls.value_of(nb)) {
            if x == y {
                return false;
            }
        }
    }

    // Interval bounds per class from order facts with a known side.
    let mut lo: HashMap<usize, i64> = HashMap::new();
    let mut hi: HashMap<usize, i64> = HashMap::new();
    for (a, b, strict) in &ords {
        let (na, nb) = (cls.node(a), cls.node(b));
        let (ra, rb) = (cls.find(na), cls.find(nb));
        if ra == rb {
            if *strict {
                return false; // a < a
            }
            continue;
        }
        let va = cls.value_of(na);
        let vb = cls.value_of(nb);
        match (va, vb) {
            (Some(Lit::Int(x)), Some(Lit::Int(y))) => {
                if *strict && !(x < y) {
                    return false;
                }
                if !*strict && !(x <= y) {
                    return false;
                }
            }
            (Some(Lit::Int(x)), None) => {
                // x (<|<=) b: lower bound on b's class.
                let bound = if *strict { x.saturating_add(1) } else { x };
                let e = lo.entry(rb).or_insert(i64::MIN);
                *e = (*e).max(bound);
            }
            (None, Some(Lit::Int(y))) => {
                let bound = if *strict { y.saturating_sub(1) } else { y };
                let e = hi.entry(ra).or_insert(i64::MAX);
                *e = (*e).min(bound);
            }
            _ => {} // both unknown: not tracked (incomplete, safe)
        }
    }
    for (rep, l) in &lo {
        if let Some(h) = hi.get(rep) {
            if l > h {
                return false;
            }
        }
        if let Some(Lit::Int(v)) = cls.value[*rep] {
            if v < *l {
                return false;
            }
        }
    }
    for (rep, h) in &hi {
        if let Some(Lit::Int(v)) = cls.value[*rep] {
            if v > *h {
                return false;
            }
        }
    }

    true
}
