//! Symbolic states: heap chunks, optimistic heap, store, and path condition.

use super::solver::{implies, sat, Sat, Truth};
use super::term::Term;
use std::collections::BTreeMap;
use std::fmt;

/// A field chunk ⟨f, t, t'⟩: permission to (and current value of) field `f`
/// of receiver `recv`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldChunk {
    pub field: String,
    pub recv: Term,
    pub val: Term,
}

/// A chunk in the precise heap: a field permission or a folded predicate
/// instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Chunk {
    Field(FieldChunk),
    Pred { name: String, args: Vec<Term> },
}

impl fmt::Display for Chunk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chunk::Field(c) => write!(f, "⟨{}, {}, {}⟩", c.field, c.recv, c.val),
            Chunk::Pred { name, args } => {
                write!(f, "⟨{}", name)?;
                for a in args {
                    write!(f, ", {}", a)?;
                }
                write!(f, "⟩")
            }
        }
    }
}

/// A symbolic permission θ: a field location or predicate instance, as it
/// appears in exclusion frames and permission checks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymPerm {
    Field { recv: Term, field: String },
    Pred { name: String, args: Vec<Term> },
}

impl fmt::Display for SymPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymPerm::Field { recv, field } => write!(f, "⟨{}, {}⟩", recv, field),
            SymPerm::Pred { name, args } => {
                write!(f, "⟨{}", name)?;
                for a in args {
                    write!(f, ", {}", a)?;
                }
                write!(f, "⟩")
            }
        }
    }
}

/// Symbolic state σ = ⟨ι, H, 𝓗, γ, g⟩. The path condition is kept as a list
/// of conjuncts. Invariant: the optimistic heap is empty unless the state is
/// imprecise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymState {
    pub imprecise: bool,
    pub heap: Vec<Chunk>,
    pub opt: Vec<FieldChunk>,
    pub store: BTreeMap<String, Term>,
    pub pc: Vec<Term>,
}

impl SymState {
    pub fn empty() -> SymState {
        SymState::default()
    }

    pub fn lookup(&self, x: &str) -> Option<&Term> {
        self.store.get(x)
    }

    pub fn add_pc(&mut self, t: Term) {
        if !t.is_true() && !self.pc.contains(&t) {
            self.pc.push(t);
        }
    }

    pub fn pc_sat(&self) -> Sat {
        sat(&self.pc)
    }

    pub fn entails(&self, goal: &Term) -> Truth {
        implies(&self.pc, goal)
    }

    /// Make the state imprecise (ι is monotone: never cleared).
    pub fn set_imprecise(&mut self) {
        self.imprecise = true;
    }

    pub fn field_chunks(&self) -> impl Iterator<Item = &FieldChunk> {
        self.heap.iter().filter_map(|c| match c {
            Chunk::Field(fc) => Some(fc),
            Chunk::Pred { .. } => None,
        })
    }

    pub fn pred_chunks(&self) -> impl Iterator<Item = (&String, &Vec<Term>)> {
        self.heap.iter().filter_map(|c| match c {
            Chunk::Pred { name, args } => Some((name, args)),
            Chunk::Field(_) => None,
        })
    }

    /// May chunk `c` refer to the same location as field access ⟨t, f⟩?
    /// Precise states use provable equality of receivers; imprecise states
    /// treat any not-provably-distinct receiver as a potential alias.
    pub fn alias(&self, c: &FieldChunk, t: &Term, f: &str) -> bool {
        if c.field != f {
            return false;
        }
        let eq = Term::eq(c.recv.clone(), t.clone());
        if self.imprecise {
            let mut q = self.pc.clone();
            q.push(eq);
            sat(&q) != Sat::Unsat
        } else {
            self.entails(&eq) == Truth::Proved
        }
    }

    /// Remove from `chunks` every field chunk that may alias ⟨t, f⟩ — and,
    /// conservatively, every predicate chunk (its body may cover ⟨t, f⟩).
    pub fn rem_f(&self, chunks: &[Chunk], t: &Term, f: &str) -> Vec<Chunk> {
        chunks
            .iter()
            .filter(|c| match c {
                Chunk::Field(fc) => !self.alias(fc, t, f),
                Chunk::Pred { .. } => false,
            })
            .cloned()
            .collect()
    }

    /// Like `rem_f` but keeps predicate chunks intact.
    pub fn rem_fp(&self, chunks: &[Chunk], t: &Term, f: &str) -> Vec<Chunk> {
        chunks
            .iter()
            .filter(|c| match c {
                Chunk::Field(fc) => !self.alias(fc, t, f),
                Chunk::Pred { .. } => true,
            })
            .cloned()
            .collect()
    }

    /// Variant of `rem_f` over optimistic-heap chunks.
    pub fn rem_f_opt(&self, chunks: &[FieldChunk], t: &Term, f: &str) -> Vec<FieldChunk> {
        chunks.iter().filter(|c| !self.alias(c, t, f)).cloned().collect()
    }

    /// First field chunk in the precise heap whose receiver provably equals
    /// `t` at field `f` (the H-lookup used by evaluation and consume).
    pub fn find_field(&self, t: &Term, f: &str) -> Option<&FieldChunk> {
        self.field_chunks().find(|c| {
            c.field == f && self.entails(&Term::eq(c.recv.clone(), t.clone())) == Truth::Proved
        })
    }

    /// First optimistic chunk whose receiver provably equals `t` at `f`.
    pub fn find_opt_field(&self, t: &Term, f: &str) -> Option<&FieldChunk> {
        self.opt.iter().find(|c| {
            c.field == f && self.entails(&Term::eq(c.recv.clone(), t.clone())) == Truth::Proved
        })
    }

    /// Predicate chunk index with provably equal arguments, if any.
    pub fn find_pred(&self, name: &str, args: &[Term]) -> Option<usize> {
        self.heap.iter().position(|c| match c {
            Chunk::Pred { name: n, args: a } => {
                n == name
                    && a.len() == args.len()
                    && a.iter().zip(args).all(|(x, y)| {
                        self.entails(&Term::eq(x.clone(), y.clone())) == Truth::Proved
                    })
            }
            Chunk::Field(_) => false,
        })
    }
}

impl fmt::Display for SymState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}", if self.imprecise { "?" } else { "·" })?;
        write!(f, ", {{")?;
        for (i, c) in self.heap.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, "}}, {{")?;
        for (i, c) in self.opt.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", Chunk::Field(c.clone()))?;
        }
        write!(f, "}}, {{")?;
        for (i, (x, t)) in self.store.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{} ↦ {}", x, t)?;
        }
        write!(f, "}}, ")?;
        if self.pc.is_empty() {
            write!(f, "true")?;
        } else {
            for (i, t) in self.pc.iter().enumerate() {
                if i > 0 {
                    write!(f, " && ")?;
                }
                write!(f, "{}", t)?;
            }
        }
        write!(f, "⟩")
    }
}
