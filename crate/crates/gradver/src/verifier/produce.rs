//! Production: assuming a formula into a symbolic state.
//!
//! Producing `? * φ` first marks the state imprecise, then produces φ.
//! Access predicates add freshly-valued field chunks, predicate instances
//! add predicate chunks, expressions strengthen the path condition, and
//! conditionals branch.

use super::eval::pc_eval;
use super::{Branch, Provenance, Subst, Vcx};
use crate::ast::{Formula, FormulaKind, GFormula};
use crate::symbolic::{Chunk, FieldChunk, SymState, Term};

pub fn produce(cx: &mut Vcx, st: SymState, phi: &GFormula, tau: &Subst) -> Vec<Branch<()>> {
    let mut st = st;
    if phi.imprecise {
        st.set_imprecise();
    }
    produce_f(cx, st, &phi.body, tau)
}

fn produce_f(cx: &mut Vcx, st: SymState, f: &Formula, tau: &Subst) -> Vec<Branch<()>> {
    match &f.kind {
        FormulaKind::Expr(e) => {
            let mut st = st;
            let (t, _) = pc_eval(cx, &st, e, tau);
            st.add_pc(t);
            vec![Branch::new((), st)]
        }
        FormulaKind::Acc(e, field) => {
            let mut st = st;
            let (t_e, _) = pc_eval(cx, &st, e, tau);
            let val = cx.fresh_sym(Provenance::FieldOf { recv: t_e.clone(), field: field.clone() });
            st.heap.push(Chunk::Field(FieldChunk { field: field.clone(), recv: t_e, val }));
            vec![Branch::new((), st)]
        }
        FormulaKind::Pred(p, args) => {
            let mut st = st;
            let ts = args.iter().map(|a| pc_eval(cx, &st, a, tau).0).collect();
            st.heap.push(Chunk::Pred { name: p.clone(), args: ts });
            vec![Branch::new((), st)]
        }
        FormulaKind::Cond(e, f1, f2) => {
            let (t, _) = pc_eval(cx, &st, e, tau);
            let mut out = Vec::new();
            for (cond, body, taken) in [(t.clone(), f1, true), (Term::not(t), f2, false)] {
                let mut s = st.clone();
                s.add_pc(cond);
                if cx.prune(&s) {
                    continue;
                }
                for mut b in produce_f(cx, s, body, tau) {
                    b.decisions.insert(0, (tau.apply(e), taken));
                    out.push(b);
                }
            }
            out
        }
        FormulaKind::Conj(f1, f2) => {
            let mut out = Vec::new();
            for b1 in produce_f(cx, st.clone(), f1, tau) {
                for mut b2 in produce_f(cx, b1.st.clone(), f2, tau) {
                    let mut decisions = b1.decisions.clone();
                    decisions.append(&mut b2.decisions);
                    let mut checks = b1.checks.clone();
                    checks.append(&mut b2.checks);
                    out.push(Branch { val: (), st: b2.st, checks, decisions });
                }
            }
            out
        }
    }
}
