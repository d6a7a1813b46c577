//! Run-time checks and their source-level forms.
//!
//! Every check is born together with a source expression phrased in the
//! vocabulary of the frame that will evaluate it, so no late γ-inversion is
//! needed for checks themselves. Exclusion frames are the one place where
//! symbolic permissions must be anchored after the fact; see
//! [`term_to_expr`].

use super::Vcx;
use crate::ast::{Expr, ExprKind};
use crate::symbolic::{Chunk, Lit, SymPerm, SymState, Term};
use std::fmt;

/// A source-level check, evaluable in a concrete frame.
#[derive(Debug, Clone)]
pub enum CheckExpr {
    /// Boolean expression that must evaluate to true.
    Expr(Expr),
    /// `acc(path.field)`: the location must be in the frame's permissions.
    Acc(Expr, String),
    /// Predicate instance, asserted equirecursively.
    Pred(String, Vec<Expr>),
    /// Footprint disjointness of two permission sets.
    Sep(Vec<CheckExpr>, Vec<CheckExpr>),
    /// Statically failing branch: always false at run time.
    Bottom,
}

impl fmt::Display for CheckExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckExpr::Expr(e) => write!(f, "{}", e),
            CheckExpr::Acc(e, field) => write!(f, "acc({}.{})", e, field),
            CheckExpr::Pred(p, args) => {
                write!(f, "{}(", p)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ")")
            }
            CheckExpr::Sep(a, b) => {
                let fmt_side = |side: &[CheckExpr]| {
                    side.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
                };
                write!(f, "sep({{{}}}, {{{}}})", fmt_side(a), fmt_side(b))
            }
            CheckExpr::Bottom => write!(f, "⊥"),
        }
    }
}

/// The symbolic form of a check.
#[derive(Debug, Clone)]
pub enum CheckKind {
    Value(Term),
    Perm(SymPerm),
    Sep(Vec<SymPerm>, Vec<SymPerm>),
    Bottom,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub kind: CheckKind,
    pub src: CheckExpr,
}

impl Check {
    pub fn value(t: Term, src: Expr) -> Check {
        Check { kind: CheckKind::Value(t), src: CheckExpr::Expr(src) }
    }

    pub fn field_perm(recv: Term, field: &str, src_recv: Expr) -> Check {
        Check {
            kind: CheckKind::Perm(SymPerm::Field { recv, field: field.to_string() }),
            src: CheckExpr::Acc(src_recv, field.to_string()),
        }
    }

    pub fn pred_perm(name: &str, args: Vec<Term>, src_args: Vec<Expr>) -> Check {
        Check {
            kind: CheckKind::Perm(SymPerm::Pred { name: name.to_string(), args }),
            src: CheckExpr::Pred(name.to_string(), src_args),
        }
    }

    pub fn bottom() -> Check {
        Check { kind: CheckKind::Bottom, src: CheckExpr::Bottom }
    }

    pub fn is_perm(&self) -> bool {
        matches!(self.kind, CheckKind::Perm(_))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.src)
    }
}

/// A consumed permission paired with its source form; Θ entries.
pub type ThetaItem = (SymPerm, CheckExpr);

/// Merge syntactically identical checks and drop tautological value checks.
pub fn dedup_checks(checks: Vec<Check>) -> Vec<Check> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for c in checks {
        if let CheckKind::Value(t) = &c.kind {
            if t.is_true() {
                continue;
            }
        }
        let key = format!("{:?}|{}", std::mem::discriminant(&c.kind), c.src);
        if seen.insert(key) {
            out.push(c);
        }
    }
    out
}

/// Rewrite a symbolic term into a source expression valid in the frame whose
/// store is `st.store`. Symbolic values are anchored by inverting the store;
/// failing that, by field-chunk provenance, validated against the current
/// heaps so the field still holds the value in question.
pub fn term_to_expr(cx: &Vcx, st: &SymState, t: &Term) -> Option<Expr> {
    let span = crate::span::Span::default();
    match t {
        Term::Lit(l) => Some(Expr::new(
            span,
            match l {
                Lit::Int(n) => ExprKind::IntLit(*n),
                Lit::Bool(b) => ExprKind::BoolLit(*b),
                Lit::Char(c) => ExprKind::CharLit(*c),
                Lit::Null => ExprKind::Null,
            },
        )),
        Term::Sym(v) => {
            if let Some((x, _)) = st.store.iter().find(|(_, tv)| **tv == *t) {
                return Some(Expr::var(span, x));
            }
            match cx.prov.get(v) {
                Some(super::Provenance::FieldOf { recv, field }) if chunk_current(st, recv, field, t) => {
                    let base = term_to_expr(cx, st, recv)?;
                    Some(Expr::new(span, ExprKind::Field(Box::new(base), field.clone())))
                }
                _ => None,
            }
        }
        Term::Not(a) => {
            Some(Expr::new(span, ExprKind::Not(Box::new(term_to_expr(cx, st, a)?))))
        }
        Term::And(a, b) => Some(Expr::new(
            span,
            ExprKind::And(
                Box::new(term_to_expr(cx, st, a)?),
                Box::new(term_to_expr(cx, st, b)?),
            ),
        )),
        Term::Or(a, b) => Some(Expr::new(
            span,
            ExprKind::Or(
                Box::new(term_to_expr(cx, st, a)?),
                Box::new(term_to_expr(cx, st, b)?),
            ),
        )),
        Term::Bin(op, a, b) => Some(Expr::new(
            span,
            ExprKind::Binary(
                *op,
                Box::new(term_to_expr(cx, st, a)?),
                Box::new(term_to_expr(cx, st, b)?),
            ),
        )),
    }
}

/// Does some heap chunk still bind `recv.field` to exactly `val`? Reading
/// the field at run time then reproduces the symbolic value.
fn chunk_current(st: &SymState, recv: &Term, field: &str, val: &Term) -> bool {
    st.heap.iter().any(|c| match c {
        Chunk::Field(fc) => fc.field == field && fc.recv == *recv && fc.val == *val,
        Chunk::Pred { .. } => false,
    }) || st.opt.iter().any(|fc| fc.field == field && fc.recv == *recv && fc.val == *val)
}

/// Translate an exclusion-frame permission into source form against the
/// caller's state. `None` means no anchor was derivable.
pub fn theta_to_expr(cx: &Vcx, st: &SymState, perm: &SymPerm) -> Option<CheckExpr> {
    match perm {
        SymPerm::Field { recv, field } => {
            Some(CheckExpr::Acc(term_to_expr(cx, st, recv)?, field.clone()))
        }
        SymPerm::Pred { name, args } => {
            let args = args
                .iter()
                .map(|a| term_to_expr(cx, st, a))
                .collect::<Option<Vec<_>>>()?;
            Some(CheckExpr::Pred(name.clone(), args))
        }
    }
}
