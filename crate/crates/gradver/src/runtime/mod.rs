//! Concrete dynamic semantics: a heap of allocated structs, per-frame access
//! permissions, equirecursive formula assertion, and a small-step interpreter
//! with exclusion frames.
//!
//! Two execution modes share the same stepping and footprint-transfer rules:
//! full mode asserts every contract formula, while guarded mode replaces
//! contract assertions with the residual checks computed by the verifier.

pub mod assert;
pub mod step;

pub use assert::{
    assert_formula, check_runtime, eframed, efoot, efoot_expr, eval_expr, foot, framed, iframed,
    term_value, vfoot, CheckError, Rcx, Valuation,
};
pub use step::{run, Event, Frame, FrameKind, Interp, Mode, Outcome, RunOpts, RunResult};

use crate::ast::Type;
use crate::span::Span;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// An opaque object reference.
pub type Loc = u32;

/// A concrete run-time value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Char(char),
    Ref(Loc),
    Null,
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{}", n),
            Value::Bool(b) => write!(f, "{}", b),
            Value::Char(c) => write!(f, "'{}'", c.escape_default()),
            Value::Ref(l) => write!(f, "ref#{}", l),
            Value::Null => write!(f, "NULL"),
        }
    }
}

pub fn default_value(ty: &Type) -> Value {
    match ty {
        Type::Int => Value::Int(0),
        Type::Bool => Value::Bool(false),
        Type::Char => Value::Char('\0'),
        Type::Struct(_) => Value::Null,
    }
}

/// A single heap location: an object reference paired with a field name.
pub type Perm = (Loc, String);

/// The permissions owned by a stack frame (or excluded at a call site).
pub type PermSet = BTreeSet<Perm>;

/// Finite heap over allocated locations. References only originate from
/// allocation, so every reachable read hits an initialized slot.
#[derive(Debug, Clone, Default)]
pub struct Heap {
    slots: BTreeMap<Perm, Value>,
    tags: BTreeMap<Loc, String>,
    next: Loc,
}

impl Heap {
    pub fn new() -> Heap {
        Heap::default()
    }

    /// Allocate a struct instance with default-initialized fields and return
    /// its fresh location plus the permissions it introduces.
    pub fn alloc(&mut self, struct_name: &str, fields: &[(Type, String)]) -> (Loc, PermSet) {
        let loc = self.next;
        self.next += 1;
        self.tags.insert(loc, struct_name.to_string());
        let mut perms = PermSet::new();
        for (ty, f) in fields {
            self.slots.insert((loc, f.clone()), default_value(ty));
            perms.insert((loc, f.clone()));
        }
        (loc, perms)
    }

    pub fn read(&self, loc: Loc, field: &str) -> Option<Value> {
        self.slots.get(&(loc, field.to_string())).copied()
    }

    pub fn write(&mut self, loc: Loc, field: &str, v: Value) -> bool {
        match self.slots.get_mut(&(loc, field.to_string())) {
            Some(slot) => {
                *slot = v;
                true
            }
            None => false,
        }
    }

    pub fn struct_of(&self, loc: Loc) -> Option<&str> {
        self.tags.get(&loc).map(|s| s.as_str())
    }
}

/// Variable environment ρ of a stack frame.
pub type Env = BTreeMap<String, Value>;

/// Execution cannot proceed: a premise of the dynamic semantics failed.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Stuck {
    #[error("{span}: {reason}")]
    Eval { span: Span, reason: String },
    /// Equirecursive assertion revisited a predicate instance it was already
    /// unrolling; the assertion would not terminate on this heap.
    #[error("{span}: assertion of predicate {pred} revisits its own instance")]
    NonTerminatingPredicate { span: Span, pred: String },
}

impl Stuck {
    pub fn new(span: Span, reason: impl Into<String>) -> Stuck {
        Stuck::Eval { span, reason: reason.into() }
    }

    pub fn span(&self) -> Span {
        match self {
            Stuck::Eval { span, .. } | Stuck::NonTerminatingPredicate { span, .. } => *span,
        }
    }
}
