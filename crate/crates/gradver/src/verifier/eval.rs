//! Symbolic evaluation of expressions.
//!
//! Two judgements: the branching, short-circuiting evaluation used in
//! imperative code, and the deterministic path-condition evaluation used in
//! formulas (logical operators are encoded structurally, the state is never
//! mutated).

use super::check::Check;
use super::{Branch, Provenance, Subst, Vcx};
use crate::ast::{Expr, ExprKind};
use crate::symbolic::{FieldChunk, Lit, SymState, Term};

fn lit_term(kind: &ExprKind) -> Option<Term> {
    Some(match kind {
        ExprKind::IntLit(n) => Term::Lit(Lit::Int(*n)),
        ExprKind::BoolLit(b) => Term::Lit(Lit::Bool(*b)),
        ExprKind::CharLit(c) => Term::Lit(Lit::Char(*c)),
        ExprKind::Null => Term::null(),
        _ => return None,
    })
}

/// Branching evaluation: each result is one execution path, with the path
/// condition extended at short-circuit points. Unsatisfiable paths are
/// pruned.
pub fn sym_eval(cx: &mut Vcx, st: &SymState, e: &Expr, tau: &Subst) -> Vec<Branch<Term>> {
    if let Some(t) = lit_term(&e.kind) {
        return vec![Branch::new(t, st.clone())];
    }
    match &e.kind {
        ExprKind::Var(x) => match st.lookup(x) {
            Some(t) => vec![Branch::new(t.clone(), st.clone())],
            None => {
                let t = cx.fresh_sym(Provenance::Havoc { var: x.clone(), site: cx.cur_site.0 });
                let mut b = Branch::new(t, st.clone());
                b.checks.push(Check::bottom());
                vec![b]
            }
        },
        ExprKind::Not(inner) => sym_eval(cx, st, inner, tau)
            .into_iter()
            .map(|b| Branch { val: Term::not(b.val.clone()), ..b })
            .collect(),
        ExprKind::And(e1, e2) => short_circuit(cx, st, e1, e2, tau, true),
        ExprKind::Or(e1, e2) => short_circuit(cx, st, e1, e2, tau, false),
        ExprKind::Binary(op, e1, e2) => {
            let mut out = Vec::new();
            for b1 in sym_eval(cx, st, e1, tau) {
                for mut b2 in sym_eval(cx, &b1.st, e2, tau) {
                    let val = Term::bin(*op, b1.val.clone(), b2.val.clone());
                    let mut checks = b1.checks.clone();
                    checks.append(&mut b2.checks);
                    let mut decisions = b1.decisions.clone();
                    decisions.append(&mut b2.decisions);
                    out.push(Branch { val, st: b2.st, checks, decisions });
                }
            }
            out
        }
        ExprKind::Field(recv, f) => {
            let mut out = Vec::new();
            for mut b in sym_eval(cx, st, recv, tau) {
                let t_e = b.val.clone();
                if let Some(fc) = b.st.find_field(&t_e, f) {
                    b.val = fc.val.clone();
                } else if let Some(fc) = b.st.find_opt_field(&t_e, f) {
                    b.val = fc.val.clone();
                } else if b.st.imprecise {
                    // Invent the value optimistically and demand the
                    // permission at run time.
                    let v = cx.fresh_sym(Provenance::FieldOf { recv: t_e.clone(), field: f.clone() });
                    b.st.opt.push(FieldChunk {
                        field: f.clone(),
                        recv: t_e.clone(),
                        val: v.clone(),
                    });
                    b.checks.push(Check::field_perm(t_e, f, tau.apply(recv)));
                    b.val = v;
                } else {
                    let v = cx.fresh_sym(Provenance::FieldOf { recv: t_e.clone(), field: f.clone() });
                    b.checks.push(Check::bottom());
                    b.val = v;
                }
                out.push(b);
            }
            out
        }
        // Literals handled above.
        _ => unreachable!(),
    }
}

/// Both paths of a short-circuiting operator. For `&&` the short path is
/// "left false"; for `||` it is "left true".
fn short_circuit(
    cx: &mut Vcx,
    st: &SymState,
    e1: &Expr,
    e2: &Expr,
    tau: &Subst,
    is_and: bool,
) -> Vec<Branch<Term>> {
    let mut out = Vec::new();
    for b1 in sym_eval(cx, st, e1, tau) {
        let t1 = b1.val.clone();
        // Short-circuit path: the result is the left value.
        {
            let mut b = b1.clone();
            let guard = if is_and { Term::not(t1.clone()) } else { t1.clone() };
            b.st.add_pc(guard);
            b.decisions.push((tau.apply(e1), !is_and));
            if !cx.prune(&b.st) {
                out.push(b);
            }
        }
        // Continue path: evaluate the right operand.
        {
            let mut pre = b1.clone();
            let guard = if is_and { t1.clone() } else { Term::not(t1.clone()) };
            pre.st.add_pc(guard);
            pre.decisions.push((tau.apply(e1), is_and));
            if cx.prune(&pre.st) {
                continue;
            }
            for mut b2 in sym_eval(cx, &pre.st, e2, tau) {
                let mut checks = pre.checks.clone();
                checks.append(&mut b2.checks);
                let mut decisions = pre.decisions.clone();
                decisions.append(&mut b2.decisions);
                out.push(Branch { val: b2.val, st: b2.st, checks, decisions });
            }
        }
    }
    out
}

/// Deterministic evaluation for formulas: logical operators are kept in the
/// term, the state is never mutated, and optimistic field reads yield fresh
/// values plus a permission check without adding chunks.
pub fn pc_eval(cx: &mut Vcx, st: &SymState, e: &Expr, tau: &Subst) -> (Term, Vec<Check>) {
    if let Some(t) = lit_term(&e.kind) {
        return (t, Vec::new());
    }
    match &e.kind {
        ExprKind::Var(x) => match st.lookup(x) {
            Some(t) => (t.clone(), Vec::new()),
            None => {
                let t = cx.fresh_sym(Provenance::Havoc { var: x.clone(), site: cx.cur_site.0 });
                (t, vec![Check::bottom()])
            }
        },
        ExprKind::Not(inner) => {
            let (t, checks) = pc_eval(cx, st, inner, tau);
            (Term::not(t), checks)
        }
        ExprKind::And(a, b) => {
            let (ta, mut ca) = pc_eval(cx, st, a, tau);
            let (tb, mut cb) = pc_eval(cx, st, b, tau);
            ca.append(&mut cb);
            (Term::and(ta, tb), ca)
        }
        ExprKind::Or(a, b) => {
            let (ta, mut ca) = pc_eval(cx, st, a, tau);
            let (tb, mut cb) = pc_eval(cx, st, b, tau);
            ca.append(&mut cb);
            (Term::or(ta, tb), ca)
        }
        ExprKind::Binary(op, a, b) => {
            let (ta, mut ca) = pc_eval(cx, st, a, tau);
            let (tb, mut cb) = pc_eval(cx, st, b, tau);
            ca.append(&mut cb);
            (Term::bin(*op, ta, tb), ca)
        }
        ExprKind::Field(recv, f) => {
            let (t_e, mut checks) = pc_eval(cx, st, recv, tau);
            if let Some(fc) = st.find_field(&t_e, f) {
                (fc.val.clone(), checks)
            } else if let Some(fc) = st.find_opt_field(&t_e, f) {
                (fc.val.clone(), checks)
            } else if st.imprecise {
                let v = cx.fresh_sym(Provenance::FieldOf { recv: t_e.clone(), field: f.clone() });
                checks.push(Check::field_perm(t_e, f, tau.apply(recv)));
                (v, checks)
            } else {
                let v = cx.fresh_sym(Provenance::FieldOf { recv: t_e.clone(), field: f.clone() });
                checks.push(Check::bottom());
                (v, checks)
            }
        }
        _ => unreachable!(),
    }
}
