//! Consumption: asserting a formula against a symbolic state and removing
//! the permissions it claims.
//!
//! Consume is a two-state judgement: expressions are evaluated against the
//! unchanging reference state (original heaps) while permissions are removed
//! from the running state. Consuming `? * φ` consumes φ with an imprecise
//! reference state and then empties both heaps of the result.

use super::check::{Check, ThetaItem};
use super::eval::pc_eval;
use super::{Decision, Subst, Vcx};
use crate::ast::{Formula, FormulaKind, GFormula};
use crate::symbolic::{SymPerm, SymState, Term, Truth};

#[derive(Debug, Clone)]
pub struct ConsumeBranch {
    pub st: SymState,
    pub checks: Vec<Check>,
    pub theta: Vec<ThetaItem>,
    pub decisions: Vec<Decision>,
}

impl ConsumeBranch {
    fn new(st: SymState) -> ConsumeBranch {
        ConsumeBranch { st, checks: Vec::new(), theta: Vec::new(), decisions: Vec::new() }
    }

    pub fn has_bottom(&self) -> bool {
        self.checks.iter().any(|c| matches!(c.kind, super::CheckKind::Bottom))
    }
}

pub fn consume(cx: &mut Vcx, st: &SymState, phi: &GFormula, tau: &Subst) -> Vec<ConsumeBranch> {
    if phi.imprecise {
        let mut reference = st.clone();
        reference.set_imprecise();
        cons(cx, st.clone(), &reference, &phi.body, tau)
            .into_iter()
            .map(|mut b| {
                // The result keeps only the store and path condition; all
                // remaining permissions are absorbed by the imprecision.
                b.st.imprecise = true;
                b.st.heap.clear();
                b.st.opt.clear();
                b
            })
            .collect()
    } else {
        cons(cx, st.clone(), &st.clone(), &phi.body, tau)
    }
}

/// Evaluate under the reference heaps but the running path condition.
fn ref_eval(
    cx: &mut Vcx,
    st: &SymState,
    reference: &SymState,
    e: &crate::ast::Expr,
    tau: &Subst,
) -> (Term, Vec<Check>) {
    let mut r = reference.clone();
    r.pc = st.pc.clone();
    pc_eval(cx, &r, e, tau)
}

fn cons(
    cx: &mut Vcx,
    st: SymState,
    reference: &SymState,
    f: &Formula,
    tau: &Subst,
) -> Vec<ConsumeBranch> {
    match &f.kind {
        FormulaKind::Expr(e) => {
            let (t, checks) = ref_eval(cx, &st, reference, e, tau);
            if st.entails(&t) == Truth::Proved {
                let mut b = ConsumeBranch::new(st);
                b.checks = checks;
                vec![b]
            } else if st.imprecise {
                let mut b = ConsumeBranch::new(st);
                b.st.add_pc(t.clone());
                b.checks = checks;
                b.checks.push(Check::value(t, tau.apply(e)));
                vec![b]
            } else {
                let mut b = ConsumeBranch::new(st);
                b.checks = checks;
                b.checks.push(Check::bottom());
                vec![b]
            }
        }
        FormulaKind::Acc(e, field) => {
            let (t_e, checks) = ref_eval(cx, &st, reference, e, tau);
            let mut b = ConsumeBranch::new(st);
            b.checks = checks;
            b.theta.push((
                SymPerm::Field { recv: t_e.clone(), field: field.clone() },
                super::CheckExpr::Acc(tau.apply(e), field.clone()),
            ));
            if b.st.find_field(&t_e, field).is_some() {
                b.st.heap = b.st.rem_fp(&b.st.heap.clone(), &t_e, field);
                b.st.opt = b.st.rem_f_opt(&b.st.opt.clone(), &t_e, field);
            } else if b.st.find_opt_field(&t_e, field).is_some() {
                b.st.heap = b.st.rem_f(&b.st.heap.clone(), &t_e, field);
                b.st.opt = b.st.rem_f_opt(&b.st.opt.clone(), &t_e, field);
            } else if b.st.imprecise {
                b.checks.push(Check::field_perm(t_e.clone(), field, tau.apply(e)));
                b.st.heap = b.st.rem_f(&b.st.heap.clone(), &t_e, field);
                b.st.opt = b.st.rem_f_opt(&b.st.opt.clone(), &t_e, field);
            } else {
                b.checks.push(Check::bottom());
            }
            vec![b]
        }
        FormulaKind::Pred(p, args) => {
            let mut checks = Vec::new();
            let mut ts = Vec::new();
            for a in args {
                let (t, mut cs) = ref_eval(cx, &st, reference, a, tau);
                checks.append(&mut cs);
                ts.push(t);
            }
            let src_args: Vec<_> = args.iter().map(|a| tau.apply(a)).collect();
            let mut b = ConsumeBranch::new(st);
            b.checks = checks;
            b.theta.push((
                SymPerm::Pred { name: p.clone(), args: ts.clone() },
                super::CheckExpr::Pred(p.clone(), src_args.clone()),
            ));
            if let Some(idx) = b.st.find_pred(p, &ts) {
                b.st.heap.remove(idx);
                b.st.opt.clear();
            } else if b.st.imprecise {
                b.st.heap.clear();
                b.st.opt.clear();
                b.checks.push(Check::pred_perm(p, ts, src_args));
            } else {
                b.checks.push(Check::bottom());
            }
            vec![b]
        }
        FormulaKind::Cond(e, f1, f2) => {
            let (t, checks) = ref_eval(cx, &st, reference, e, tau);
            let mut out = Vec::new();
            for (cond, body, taken) in [(t.clone(), f1, true), (Term::not(t), f2, false)] {
                let mut s = st.clone();
                s.add_pc(cond);
                if cx.prune(&s) {
                    continue;
                }
                for mut b in cons(cx, s, reference, body, tau) {
                    b.decisions.insert(0, (tau.apply(e), taken));
                    let mut cs = checks.clone();
                    cs.append(&mut b.checks);
                    b.checks = cs;
                    out.push(b);
                }
            }
            out
        }
        FormulaKind::Conj(f1, f2) => {
            let mut out = Vec::new();
            for b1 in cons(cx, st.clone(), reference, f1, tau) {
                for mut b2 in cons(cx, b1.st.clone(), reference, f2, tau) {
                    let mut checks = b1.checks.clone();
                    checks.append(&mut b2.checks);
                    let mut theta = b1.theta.clone();
                    theta.append(&mut b2.theta);
                    let mut decisions = b1.decisions.clone();
                    decisions.append(&mut b2.decisions);
                    // The conjuncts' permissions must be separated exactly
                    // when some permission check was emitted optimistically.
                    if checks.iter().any(Check::is_perm) {
                        let lhs: Vec<_> = b1.theta.iter().map(|(p, _)| p.clone()).collect();
                        let rhs: Vec<_> = b2.theta.iter().map(|(p, _)| p.clone()).collect();
                        let lsrc: Vec<_> = b1.theta.iter().map(|(_, s)| s.clone()).collect();
                        let rsrc: Vec<_> = b2.theta.iter().map(|(_, s)| s.clone()).collect();
                        checks.push(Check {
                            kind: super::CheckKind::Sep(lhs, rhs),
                            src: super::CheckExpr::Sep(lsrc, rsrc),
                        });
                    }
                    out.push(ConsumeBranch { st: b2.st, checks, theta, decisions });
                }
            }
            out
        }
    }
}
