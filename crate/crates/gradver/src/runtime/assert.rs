//! Expression evaluation, framing, formula assertion, and footprints over
//! concrete states.
//!
//! Predicates are equirecursive here: asserting or framing an instance
//! unrolls its body under the parameter environment. Unrolling tracks the
//! instances on the current derivation and stops with a distinguished error
//! if one recurs, since that derivation could not terminate.

use super::{Env, Heap, Loc, PermSet, Stuck, Value};
use crate::ast::{BinOp, Expr, ExprKind, Formula, FormulaKind, GFormula, Program};
use crate::span::Span;
use crate::symbolic::{Lit, SymPerm, SymVal, Term};
use std::collections::{BTreeMap, BTreeSet};

/// Shared context for assertion: the program (for predicate and struct
/// lookups) and the set of predicates whose unrolling mentions `?`.
pub struct Rcx<'p> {
    pub program: &'p Program,
    imprecise_preds: BTreeSet<String>,
}

impl<'p> Rcx<'p> {
    pub fn new(program: &'p Program) -> Rcx<'p> {
        Rcx { program, imprecise_preds: crate::verifier::imprecise_predicates(program) }
    }

    /// A formula is completely precise when neither it nor the equirecursive
    /// unrolling of any predicate it mentions contains `?`.
    pub fn completely_precise(&self, phi: &GFormula) -> bool {
        if phi.imprecise {
            return false;
        }
        let mut preds = BTreeSet::new();
        phi.body.predicates(&mut preds);
        preds.is_disjoint(&self.imprecise_preds)
    }
}

fn stuck(span: Span, reason: impl Into<String>) -> Stuck {
    Stuck::new(span, reason)
}

/// Evaluate an expression; `&&` and `||` short-circuit.
pub fn eval_expr(h: &Heap, env: &Env, e: &Expr) -> Result<Value, Stuck> {
    match &e.kind {
        ExprKind::IntLit(n) => Ok(Value::Int(*n)),
        ExprKind::BoolLit(b) => Ok(Value::Bool(*b)),
        ExprKind::CharLit(c) => Ok(Value::Char(*c)),
        ExprKind::Null => Ok(Value::Null),
        ExprKind::Var(x) => {
            env.get(x).copied().ok_or_else(|| stuck(e.span, format!("undefined variable {}", x)))
        }
        ExprKind::Field(recv, field) => {
            let l = eval_ref(h, env, recv)?;
            h.read(l, field)
                .ok_or_else(|| stuck(e.span, format!("no field {} at ref#{}", field, l)))
        }
        ExprKind::Not(inner) => match eval_expr(h, env, inner)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            v => Err(stuck(e.span, format!("cannot negate {}", v))),
        },
        ExprKind::And(a, b) => match eval_bool(h, env, a)? {
            false => Ok(Value::Bool(false)),
            true => Ok(Value::Bool(eval_bool(h, env, b)?)),
        },
        ExprKind::Or(a, b) => match eval_bool(h, env, a)? {
            true => Ok(Value::Bool(true)),
            false => Ok(Value::Bool(eval_bool(h, env, b)?)),
        },
        ExprKind::Binary(op, a, b) => {
            let va = eval_expr(h, env, a)?;
            let vb = eval_expr(h, env, b)?;
            apply_binop(*op, va, vb).ok_or_else(|| {
                stuck(e.span, format!("cannot apply {} to {} and {}", op, va, vb))
            })
        }
    }
}

fn eval_bool(h: &Heap, env: &Env, e: &Expr) -> Result<bool, Stuck> {
    match eval_expr(h, env, e)? {
        Value::Bool(b) => Ok(b),
        v => Err(stuck(e.span, format!("expected a boolean, found {}", v))),
    }
}

fn eval_ref(h: &Heap, env: &Env, e: &Expr) -> Result<Loc, Stuck> {
    match eval_expr(h, env, e)? {
        Value::Ref(l) => Ok(l),
        Value::Null => Err(stuck(e.span, "null dereference")),
        v => Err(stuck(e.span, format!("cannot dereference {}", v))),
    }
}

fn apply_binop(op: BinOp, a: Value, b: Value) -> Option<Value> {
    use BinOp::*;
    Some(match (op, a, b) {
        (Add, Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_add(y)),
        (Sub, Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_sub(y)),
        (Mul, Value::Int(x), Value::Int(y)) => Value::Int(x.wrapping_mul(y)),
        (Div, Value::Int(x), Value::Int(y)) if y != 0 => Value::Int(x.wrapping_div(y)),
        (Div, ..) => return None,
        (Eq, x, y) => Value::Bool(x == y),
        (Ne, x, y) => Value::Bool(x != y),
        (Lt, Value::Int(x), Value::Int(y)) => Value::Bool(x < y),
        (Le, Value::Int(x), Value::Int(y)) => Value::Bool(x <= y),
        (Gt, Value::Int(x), Value::Int(y)) => Value::Bool(x > y),
        (Ge, Value::Int(x), Value::Int(y)) => Value::Bool(x >= y),
        _ => return None,
    })
}

/// Is every heap location read by `e` covered by `perms`? Short-circuiting
/// operators only need their evaluated operands framed.
pub fn framed(h: &Heap, perms: &PermSet, env: &Env, e: &Expr) -> Result<bool, Stuck> {
    match &e.kind {
        ExprKind::IntLit(_)
        | ExprKind::BoolLit(_)
        | ExprKind::CharLit(_)
        | ExprKind::Null
        | ExprKind::Var(_) => Ok(true),
        ExprKind::Field(recv, field) => {
            if !framed(h, perms, env, recv)? {
                return Ok(false);
            }
            let l = eval_ref(h, env, recv)?;
            Ok(perms.contains(&(l, field.clone())))
        }
        ExprKind::Not(inner) => framed(h, perms, env, inner),
        ExprKind::And(a, b) => match eval_bool(h, env, a)? {
            false => framed(h, perms, env, a),
            true => Ok(framed(h, perms, env, a)? && framed(h, perms, env, b)?),
        },
        ExprKind::Or(a, b) => match eval_bool(h, env, a)? {
            true => framed(h, perms, env, a),
            false => Ok(framed(h, perms, env, a)? && framed(h, perms, env, b)?),
        },
        ExprKind::Binary(_, a, b) => {
            Ok(framed(h, perms, env, a)? && framed(h, perms, env, b)?)
        }
    }
}

/// Isorecursive formula framing: predicate instances only require their
/// argument expressions framed, not their bodies.
pub fn iframed(h: &Heap, perms: &PermSet, env: &Env, f: &Formula) -> Result<bool, Stuck> {
    match &f.kind {
        FormulaKind::Expr(e) | FormulaKind::Acc(e, _) => framed(h, perms, env, e),
        FormulaKind::Pred(_, args) => {
            for a in args {
                if !framed(h, perms, env, a)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        FormulaKind::Cond(e, f1, f2) => {
            if !framed(h, perms, env, e)? {
                return Ok(false);
            }
            iframed(h, perms, env, if eval_bool(h, env, e)? { f1 } else { f2 })
        }
        FormulaKind::Conj(f1, f2) => {
            Ok(iframed(h, perms, env, f1)? && iframed(h, perms, env, f2)?)
        }
    }
}

/// The stack of predicate instances currently being unrolled; a revisit
/// means the derivation cannot terminate on this heap.
type PredStack = Vec<(String, Vec<Value>)>;

fn unroll_pred<'r, 'p>(
    cx: &'r Rcx<'p>,
    h: &Heap,
    env: &Env,
    span: Span,
    name: &str,
    args: &[Expr],
    stack: &mut PredStack,
) -> Result<(&'r GFormula, Env), Stuck> {
    let pd = cx
        .program
        .predicate(name)
        .ok_or_else(|| stuck(span, format!("unknown predicate {}", name)))?;
    let mut vals = Vec::new();
    for a in args {
        vals.push(eval_expr(h, env, a)?);
    }
    let frame = (name.to_string(), vals.clone());
    if stack.contains(&frame) {
        return Err(Stuck::NonTerminatingPredicate { span, pred: name.to_string() });
    }
    stack.push(frame);
    let penv: Env =
        pd.params.iter().zip(&vals).map(|((_, x), v)| (x.clone(), *v)).collect();
    Ok((&pd.body, penv))
}

/// Equirecursive formula framing: predicate instances are unrolled.
pub fn eframed(
    cx: &Rcx,
    h: &Heap,
    perms: &PermSet,
    env: &Env,
    f: &Formula,
) -> Result<bool, Stuck> {
    let mut stack = PredStack::new();
    eframed_in(cx, h, perms, env, f, &mut stack)
}

fn eframed_in(
    cx: &Rcx,
    h: &Heap,
    perms: &PermSet,
    env: &Env,
    f: &Formula,
    stack: &mut PredStack,
) -> Result<bool, Stuck> {
    match &f.kind {
        FormulaKind::Expr(e) | FormulaKind::Acc(e, _) => framed(h, perms, env, e),
        FormulaKind::Pred(name, args) => {
            for a in args {
                if !framed(h, perms, env, a)? {
                    return Ok(false);
                }
            }
            let (body, penv) = unroll_pred(cx, h, env, f.span, name, args, stack)?;
            let r = eframed_in(cx, h, perms, &penv, &body.body, stack);
            stack.pop();
            r
        }
        FormulaKind::Cond(e, f1, f2) => {
            if !framed(h, perms, env, e)? {
                return Ok(false);
            }
            eframed_in(cx, h, perms, env, if eval_bool(h, env, e)? { f1 } else { f2 }, stack)
        }
        FormulaKind::Conj(f1, f2) => Ok(eframed_in(cx, h, perms, env, f1, stack)?
            && eframed_in(cx, h, perms, env, f2, stack)?),
    }
}

/// Does the state ⟨H, α, ρ⟩ satisfy the (possibly imprecise) formula?
///
/// An imprecise formula additionally demands that its precise part is
/// equirecursively framed by the owned permissions.
pub fn assert_formula(
    cx: &Rcx,
    h: &Heap,
    perms: &PermSet,
    env: &Env,
    phi: &GFormula,
) -> Result<bool, Stuck> {
    let mut stack = PredStack::new();
    if phi.imprecise {
        Ok(assert_f(cx, h, perms, env, &phi.body, &mut stack)?
            && eframed(cx, h, perms, env, &phi.body)?)
    } else {
        assert_f(cx, h, perms, env, &phi.body, &mut stack)
    }
}

fn assert_f(
    cx: &Rcx,
    h: &Heap,
    perms: &PermSet,
    env: &Env,
    f: &Formula,
    stack: &mut PredStack,
) -> Result<bool, Stuck> {
    match &f.kind {
        FormulaKind::Expr(e) => Ok(eval_expr(h, env, e)? == Value::Bool(true)),
        FormulaKind::Acc(e, field) => match eval_expr(h, env, e)? {
            Value::Ref(l) => Ok(perms.contains(&(l, field.clone()))),
            _ => Ok(false),
        },
        FormulaKind::Cond(e, f1, f2) => {
            assert_f(cx, h, perms, env, if eval_bool(h, env, e)? { f1 } else { f2 }, stack)
        }
        FormulaKind::Conj(f1, f2) => {
            // The separating split (α1, α2) is chosen greedily: the exact
            // footprint of the left conjunct is the minimal set that can
            // satisfy it, so the right conjunct gets everything else.
            let foot1 = efoot_f(cx, h, env, f1, stack)?;
            if !foot1.is_subset(perms) {
                return Ok(false);
            }
            if !assert_f(cx, h, &foot1, env, f1, stack)? {
                return Ok(false);
            }
            let rest: PermSet = perms.difference(&foot1).cloned().collect();
            assert_f(cx, h, &rest, env, f2, stack)
        }
        FormulaKind::Pred(name, args) => {
            let (body, penv) = unroll_pred(cx, h, env, f.span, name, args, stack)?;
            let r = if body.imprecise {
                Ok(assert_f(cx, h, perms, &penv, &body.body, stack)?
                    && eframed_in(cx, h, perms, &penv, &body.body, &mut PredStack::new())?)
            } else {
                assert_f(cx, h, perms, &penv, &body.body, stack)
            };
            stack.pop();
            r
        }
    }
}

/// Exact footprint of an expression: every location it reads.
pub fn efoot_expr(h: &Heap, env: &Env, e: &Expr) -> Result<PermSet, Stuck> {
    match &e.kind {
        ExprKind::IntLit(_)
        | ExprKind::BoolLit(_)
        | ExprKind::CharLit(_)
        | ExprKind::Null
        | ExprKind::Var(_) => Ok(PermSet::new()),
        ExprKind::Field(recv, field) => {
            let mut out = efoot_expr(h, env, recv)?;
            let l = eval_ref(h, env, recv)?;
            out.insert((l, field.clone()));
            Ok(out)
        }
        ExprKind::Not(inner) => efoot_expr(h, env, inner),
        ExprKind::And(a, b) => {
            let mut out = efoot_expr(h, env, a)?;
            if eval_bool(h, env, a)? {
                out.extend(efoot_expr(h, env, b)?);
            }
            Ok(out)
        }
        ExprKind::Or(a, b) => {
            let mut out = efoot_expr(h, env, a)?;
            if !eval_bool(h, env, a)? {
                out.extend(efoot_expr(h, env, b)?);
            }
            Ok(out)
        }
        ExprKind::Binary(_, a, b) => {
            let mut out = efoot_expr(h, env, a)?;
            out.extend(efoot_expr(h, env, b)?);
            Ok(out)
        }
    }
}

/// Exact footprint of a formula: the minimal permissions needed to assert
/// and frame it (predicates unrolled equirecursively).
pub fn efoot(cx: &Rcx, h: &Heap, env: &Env, phi: &GFormula) -> Result<PermSet, Stuck> {
    let mut stack = PredStack::new();
    efoot_f(cx, h, env, &phi.body, &mut stack)
}

fn efoot_f(
    cx: &Rcx,
    h: &Heap,
    env: &Env,
    f: &Formula,
    stack: &mut PredStack,
) -> Result<PermSet, Stuck> {
    match &f.kind {
        FormulaKind::Expr(e) => efoot_expr(h, env, e),
        FormulaKind::Acc(e, field) => {
            let mut out = efoot_expr(h, env, e)?;
            let l = eval_ref(h, env, e)?;
            out.insert((l, field.clone()));
            Ok(out)
        }
        FormulaKind::Cond(e, f1, f2) => {
            let mut out = efoot_expr(h, env, e)?;
            out.extend(efoot_f(cx, h, env, if eval_bool(h, env, e)? { f1 } else { f2 }, stack)?);
            Ok(out)
        }
        FormulaKind::Conj(f1, f2) => {
            let mut out = efoot_f(cx, h, env, f1, stack)?;
            out.extend(efoot_f(cx, h, env, f2, stack)?);
            Ok(out)
        }
        FormulaKind::Pred(name, args) => {
            let mut out = PermSet::new();
            for a in args {
                out.extend(efoot_expr(h, env, a)?);
            }
            let (body, penv) = unroll_pred(cx, h, env, f.span, name, args, stack)?;
            let r = efoot_f(cx, h, &penv, &body.body, stack);
            stack.pop();
            out.extend(r?);
            Ok(out)
        }
    }
}

/// Maximal footprint: the exact footprint for completely precise formulas,
/// everything owned otherwise.
pub fn foot(
    cx: &Rcx,
    h: &Heap,
    perms: &PermSet,
    env: &Env,
    phi: &GFormula,
) -> Result<PermSet, Stuck> {
    if cx.completely_precise(phi) {
        efoot(cx, h, env, phi)
    } else {
        Ok(perms.clone())
    }
}

// ---------------------------------------------------------------------------
// Valuation-based check assertion (used by co-execution).
// ---------------------------------------------------------------------------

/// Partial map from symbolic values to the concrete values they model.
pub type Valuation = BTreeMap<SymVal, Value>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum CheckError {
    /// The valuation does not cover a symbolic value the check mentions —
    /// a harness bug, not program behavior.
    #[error("symbolic value ν{0} has no concrete valuation")]
    Unvalued(SymVal),
    #[error(transparent)]
    Stuck(#[from] Stuck),
}

/// Concrete value of a symbolic term under a valuation.
pub fn term_value(v: &Valuation, t: &Term) -> Result<Value, CheckError> {
    match t {
        Term::Lit(l) => Ok(match l {
            Lit::Int(n) => Value::Int(*n),
            Lit::Bool(b) => Value::Bool(*b),
            Lit::Char(c) => Value::Char(*c),
            Lit::Null => Value::Null,
        }),
        Term::Sym(s) => v.get(s).copied().ok_or(CheckError::Unvalued(*s)),
        Term::Not(a) => match term_value(v, a)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            other => Err(Stuck::new(Span::default(), format!("cannot negate {}", other)).into()),
        },
        Term::And(a, b) => match term_value(v, a)? {
            Value::Bool(false) => Ok(Value::Bool(false)),
            Value::Bool(true) => term_value(v, b),
            other => Err(Stuck::new(Span::default(), format!("not a boolean: {}", other)).into()),
        },
        Term::Or(a, b) => match term_value(v, a)? {
            Value::Bool(true) => Ok(Value::Bool(true)),
            Value::Bool(false) => term_value(v, b),
            other => Err(Stuck::new(Span::default(), format!("not a boolean: {}", other)).into()),
        },
        Term::Bin(op, a, b) => {
            let va = term_value(v, a)?;
            let vb = term_value(v, b)?;
            apply_binop(*op, va, vb).ok_or_else(|| {
                Stuck::new(Span::default(), format!("cannot apply {} to {} and {}", op, va, vb))
                    .into()
            })
        }
    }
}

/// Concrete footprint of a symbolic permission: a single location for a
/// field, the exact footprint of the body for a predicate instance.
pub fn vfoot(cx: &Rcx, v: &Valuation, h: &Heap, perm: &SymPerm) -> Result<PermSet, CheckError> {
    match perm {
        SymPerm::Field { recv, field } => match term_value(v, recv)? {
            Value::Ref(l) => Ok([(l, field.clone())].into_iter().collect()),
            other => Err(Stuck::new(
                Span::default(),
                format!("field permission receiver is {}", other),
            )
            .into()),
        },
        SymPerm::Pred { name, args } => {
            let pd = cx.program.predicate(name).ok_or_else(|| {
                CheckError::Stuck(Stuck::new(
                    Span::default(),
                    format!("unknown predicate {}", name),
                ))
            })?;
            let mut penv = Env::new();
            for ((_, x), a) in pd.params.iter().zip(args) {
                penv.insert(x.clone(), term_value(v, a)?);
            }
            Ok(efoot(cx, h, &penv, &pd.body)?)
        }
    }
}

/// Assert one symbolic run-time check against a concrete state under a
/// valuation.
pub fn check_runtime(
    cx: &Rcx,
    v: &Valuation,
    h: &Heap,
    perms: &PermSet,
    check: &crate::verifier::CheckKind,
) -> Result<bool, CheckError> {
    use crate::verifier::CheckKind;
    match check {
        CheckKind::Value(t) => Ok(term_value(v, t)? == Value::Bool(true)),
        CheckKind::Perm(SymPerm::Field { recv, field }) => match term_value(v, recv)? {
            Value::Ref(l) => Ok(perms.contains(&(l, field.clone()))),
            _ => Ok(false),
        },
        CheckKind::Perm(SymPerm::Pred { name, args }) => {
            let pd = cx.program.predicate(name).ok_or_else(|| {
                CheckError::Stuck(Stuck::new(
                    Span::default(),
                    format!("unknown predicate {}", name),
                ))
            })?;
            let mut penv = Env::new();
            for ((_, x), a) in pd.params.iter().zip(args) {
                penv.insert(x.clone(), term_value(v, a)?);
            }
            Ok(assert_formula(cx, h, perms, &penv, &pd.body)?)
        }
        CheckKind::Sep(lhs, rhs) => {
            let mut fa = PermSet::new();
            for p in lhs {
                fa.extend(vfoot(cx, v, h, p)?);
            }
            let mut fb = PermSet::new();
            for p in rhs {
                fb.extend(vfoot(cx, v, h, p)?);
            }
            Ok(fa.is_disjoint(&fb))
        }
        CheckKind::Bottom => Ok(false),
    }
}
