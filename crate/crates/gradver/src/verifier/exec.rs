//! Single symbolic execution steps over statements.
//!
//! Each step may branch; every branch carries the run-time checks collected
//! from its sub-derivations, the source-level decisions that identify the
//! branch, and (at call and loop sites) the exclusion frame.

use super::check::{theta_to_expr, CheckExpr};
use super::consume::consume;
use super::eval::{pc_eval, sym_eval};
use super::produce::produce;
use super::{Branch, Check, Decision, Provenance, Subst, Vcx};
use crate::ast::{
    Expr, Formula, FormulaKind, GFormula, MethodDef, Stmt, StmtKind, Type,
};
use crate::symbolic::{Chunk, FieldChunk, SymPerm, SymState, Term};
use std::collections::BTreeSet;

/// One outgoing branch of a statement step.
#[derive(Debug, Clone)]
pub struct StepOut {
    pub stmt: Stmt,
    pub st: SymState,
    pub checks: Vec<Check>,
    /// Decisions evaluable before the statement runs.
    pub pre_decisions: Vec<Decision>,
    /// Decisions evaluable only after the statement completes (call results).
    pub post_decisions: Vec<Decision>,
    /// Exclusion frame for this edge, with source anchors where derivable.
    pub exclusion: Vec<(SymPerm, Option<CheckExpr>)>,
}

impl StepOut {
    fn new(stmt: Stmt, st: SymState) -> StepOut {
        StepOut {
            stmt,
            st,
            checks: Vec::new(),
            pre_decisions: Vec::new(),
            post_decisions: Vec::new(),
            exclusion: Vec::new(),
        }
    }
}

fn default_value(ty: &Type) -> Term {
    match ty {
        Type::Int => Term::int(0),
        Type::Bool => Term::t_false(),
        Type::Char => Term::Lit(crate::symbolic::Lit::Char('\0')),
        Type::Struct(_) => Term::null(),
    }
}

/// All permissions left in the state, unless the formula is completely
/// precise (in which case nothing needs excluding).
pub fn rem_frame(cx: &Vcx, st: &SymState, phi: &GFormula) -> Vec<SymPerm> {
    if cx.completely_precise(phi) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for c in &st.heap {
        match c {
            Chunk::Field(fc) => {
                out.push(SymPerm::Field { recv: fc.recv.clone(), field: fc.field.clone() })
            }
            Chunk::Pred { name, args } => {
                out.push(SymPerm::Pred { name: name.clone(), args: args.clone() })
            }
        }
    }
    for fc in &st.opt {
        out.push(SymPerm::Field { recv: fc.recv.clone(), field: fc.field.clone() });
    }
    out
}

fn translate_exclusion(
    cx: &mut Vcx,
    st: &SymState,
    perms: Vec<SymPerm>,
) -> Vec<(SymPerm, Option<CheckExpr>)> {
    perms
        .into_iter()
        .map(|p| {
            let src = theta_to_expr(cx, st, &p);
            if src.is_none() {
                cx.diagnostics.push(format!(
                    "{}: no source anchor for excluded permission {}",
                    cx.cur_site.1, p
                ));
            }
            (p, src)
        })
        .collect()
}

/// Evaluate a list of expressions left-to-right with branching.
fn eval_args(
    cx: &mut Vcx,
    st: &SymState,
    args: &[Expr],
    tau: &Subst,
) -> Vec<Branch<Vec<Term>>> {
    let mut acc = vec![Branch::new(Vec::new(), st.clone())];
    for a in args {
        let mut next = Vec::new();
        for b in acc {
            for mut be in sym_eval(cx, &b.st, a, tau) {
                let mut vals = b.val.clone();
                vals.push(be.val.clone());
                let mut checks = b.checks.clone();
                checks.append(&mut be.checks);
                let mut decisions = b.decisions.clone();
                decisions.append(&mut be.decisions);
                next.push(Branch { val: vals, st: be.st, checks, decisions });
            }
        }
        acc = next;
    }
    acc
}

fn param_subst(params: &[(Type, String)], args: &[Expr]) -> Subst {
    let mut tau = Subst::identity();
    for ((_, x), a) in params.iter().zip(args) {
        tau.bind(x, a.clone());
    }
    tau
}

fn param_store(params: &[(Type, String)], ts: &[Term]) -> std::collections::BTreeMap<String, Term> {
    params.iter().zip(ts).map(|((_, x), t)| (x.clone(), t.clone())).collect()
}

/// Execute the head of `s` (assumed normalized and non-skip) one step.
pub fn step(cx: &mut Vcx, st: &SymState, s: &Stmt) -> Vec<StepOut> {
    let (head, tail) = s.normalize().uncons();
    cx.cur_site = (head.id(), head.span());
    let id = Subst::identity();
    match head.kind() {
        StmtKind::Skip => vec![StepOut::new(tail, st.clone())],
        StmtKind::Seq(..) => unreachable!("normalized statement"),
        StmtKind::Assign(x, e) => sym_eval(cx, st, e, &id)
            .into_iter()
            .map(|b| {
                let mut o = StepOut::new(tail.clone(), b.st);
                o.st.store.insert(x.clone(), b.val);
                o.checks = b.checks;
                o.pre_decisions = b.decisions;
                o
            })
            .collect(),
        StmtKind::AssignField(x, f, e) => {
            let mut out = Vec::new();
            let acc_f = GFormula::precise(Formula {
                span: head.span(),
                kind: FormulaKind::Acc(Expr::var(head.span(), x), f.clone()),
            });
            for b in sym_eval(cx, st, e, &id) {
                for cb in consume(cx, &b.st, &acc_f, &id) {
                    let mut o = StepOut::new(tail.clone(), cb.st);
                    let recv = o.st.lookup(x).cloned().unwrap_or_else(Term::null);
                    o.st.heap.push(Chunk::Field(FieldChunk {
                        field: f.clone(),
                        recv,
                        val: b.val.clone(),
                    }));
                    o.checks = b.checks.clone();
                    o.checks.extend(cb.checks);
                    o.pre_decisions = b.decisions.clone();
                    o.pre_decisions.extend(cb.decisions);
                    out.push(o);
                }
            }
            out
        }
        StmtKind::Alloc(x, struct_name) => {
            let recv = cx.fresh_sym(Provenance::AllocRef { site: head.id() });
            let mut o = StepOut::new(tail, st.clone());
            if let Some(sd) = cx.program.struct_def(struct_name) {
                for (ty, f) in &sd.fields {
                    o.st.heap.push(Chunk::Field(FieldChunk {
                        field: f.clone(),
                        recv: recv.clone(),
                        val: default_value(ty),
                    }));
                }
            }
            // Fresh allocations are never null; recording this keeps
            // null-comparison branches prunable.
            o.st.add_pc(Term::bin(crate::ast::BinOp::Ne, recv.clone(), Term::null()));
            o.st.store.insert(x.clone(), recv);
            vec![o]
        }
        StmtKind::Call(y, m, args) => {
            let method: &MethodDef = match cx.program.method(m) {
                Some(m) => m,
                None => {
                    let mut o = StepOut::new(tail, st.clone());
                    o.checks.push(Check::bottom());
                    return vec![o];
                }
            };
            let method = method.clone();
            let tau_pre = param_subst(&method.params, args);
            let mut out = Vec::new();
            for ab in eval_args(cx, st, args, &id) {
                let caller_store = ab.st.store.clone();
                let mut callee_st = ab.st.clone();
                callee_st.store = param_store(&method.params, &ab.val);
                for cb in consume(cx, &callee_st, &method.pre, &tau_pre) {
                    let excl = rem_frame(cx, &cb.st, &method.pre);
                    let mut anchor_st = cb.st.clone();
                    anchor_st.store = caller_store.clone();
                    let exclusion = translate_exclusion(cx, &anchor_st, excl);
                    let result = cx.fresh_sym(Provenance::CallResult { site: head.id() });
                    let mut tau_post = tau_pre.clone();
                    tau_post.bind("result", Expr::var(head.span(), y));
                    let mut post_st = cb.st.clone();
                    post_st.store = param_store(&method.params, &ab.val);
                    post_st.store.insert("result".to_string(), result.clone());
                    for pb in produce(cx, post_st, &method.post, &tau_post) {
                        let mut o = StepOut::new(tail.clone(), pb.st);
                        o.st.store = caller_store.clone();
                        o.st.store.insert(y.clone(), result.clone());
                        o.checks = ab.checks.clone();
                        o.checks.extend(cb.checks.clone());
                        o.pre_decisions = ab.decisions.clone();
                        o.pre_decisions.extend(cb.decisions.clone());
                        o.post_decisions = pb.decisions;
                        o.exclusion = exclusion.clone();
                        out.push(o);
                    }
                }
            }
            out
        }
        StmtKind::Assert(phi) => {
            let gf = GFormula { span: phi.span, imprecise: true, body: phi.clone() };
            let mut out = Vec::new();
            for cb in consume(cx, st, &gf, &id) {
                for pb in produce(cx, cb.st.clone(), &gf, &id) {
                    let mut o = StepOut::new(tail.clone(), st.clone());
                    o.st.pc = pb.st.pc;
                    o.checks = cb.checks.clone();
                    o.pre_decisions = cb.decisions.clone();
                    o.pre_decisions.extend(pb.decisions);
                    out.push(o);
                }
            }
            out
        }
        StmtKind::Fold(p, args) => {
            let pd = match cx.program.predicate(p) {
                Some(pd) => pd.clone(),
                None => {
                    let mut o = StepOut::new(tail, st.clone());
                    o.checks.push(Check::bottom());
                    return vec![o];
                }
            };
            let tau_body = param_subst(&pd.params, args);
            let mut out = Vec::new();
            for ab in eval_args(cx, st, args, &id) {
                let caller_store = ab.st.store.clone();
                let mut body_st = ab.st.clone();
                body_st.store = param_store(&pd.params, &ab.val);
                for cb in consume(cx, &body_st, &pd.body, &tau_body) {
                    let mut o = StepOut::new(tail.clone(), cb.st);
                    o.st.store = caller_store.clone();
                    o.st.heap.push(Chunk::Pred { name: p.clone(), args: ab.val.clone() });
                    o.checks = ab.checks.clone();
                    o.checks.extend(cb.checks.clone());
                    o.pre_decisions = ab.decisions.clone();
                    o.pre_decisions.extend(cb.decisions.clone());
                    out.push(o);
                }
            }
            out
        }
        StmtKind::Unfold(p, args) => {
            let pd = match cx.program.predicate(p) {
                Some(pd) => pd.clone(),
                None => {
                    let mut o = StepOut::new(tail, st.clone());
                    o.checks.push(Check::bottom());
                    return vec![o];
                }
            };
            let inst = GFormula::precise(Formula {
                span: head.span(),
                kind: FormulaKind::Pred(p.clone(), args.clone()),
            });
            let tau_body = param_subst(&pd.params, args);
            let mut out = Vec::new();
            for ab in eval_args(cx, st, args, &id) {
                let caller_store = ab.st.store.clone();
                for cb in consume(cx, &ab.st, &inst, &id) {
                    let mut body_st = cb.st.clone();
                    body_st.store = param_store(&pd.params, &ab.val);
                    for pb in produce(cx, body_st, &pd.body, &tau_body) {
                        let mut o = StepOut::new(tail.clone(), pb.st);
                        o.st.store = caller_store.clone();
                        o.checks = ab.checks.clone();
                        o.checks.extend(cb.checks.clone());
                        o.pre_decisions = ab.decisions.clone();
                        o.pre_decisions.extend(cb.decisions.clone());
                        o.pre_decisions.extend(pb.decisions);
                        out.push(o);
                    }
                }
            }
            out
        }
        StmtKind::If(e, s1, s2) => {
            let mut out = Vec::new();
            for b in sym_eval(cx, st, e, &id) {
                for (cond, body, taken) in
                    [(b.val.clone(), s1, true), (Term::not(b.val.clone()), s2, false)]
                {
                    let mut s = b.st.clone();
                    s.add_pc(cond);
                    if cx.prune(&s) {
                        continue;
                    }
                    let next = Stmt::seq(body.clone(), tail.clone()).normalize();
                    let mut o = StepOut::new(next, s);
                    o.checks = b.checks.clone();
                    o.pre_decisions = b.decisions.clone();
                    o.pre_decisions.push((e.clone(), taken));
                    out.push(o);
                }
            }
            out
        }
        StmtKind::While(e, inv, body) => {
            let mut modified = BTreeSet::new();
            body.modified(&mut modified);
            let mut out = Vec::new();
            for cb in consume(cx, st, inv, &id) {
                let excl = rem_frame(cx, &cb.st, inv);
                let exclusion = translate_exclusion(cx, &cb.st.clone(), excl);
                let mut havocked = cb.st.clone();
                for x in &modified {
                    let t = cx.fresh_sym(Provenance::Havoc { var: x.clone(), site: head.id() });
                    havocked.store.insert(x.clone(), t);
                }
                for pb in produce(cx, havocked.clone(), inv, &id) {
                    let (t, econ_checks) = pc_eval(cx, &pb.st, e, &id);
                    let mut o = StepOut::new(tail.clone(), pb.st);
                    o.st.add_pc(Term::not(t));
                    if cx.prune(&o.st) {
                        continue;
                    }
                    o.checks = cb.checks.clone();
                    o.checks.extend(econ_checks);
                    o.pre_decisions = cb.decisions.clone();
                    // Decisions made while re-producing the invariant refer to
                    // havocked variables; they are only evaluable at loop exit.
                    o.post_decisions = pb.decisions;
                    o.exclusion = exclusion.clone();
                    out.push(o);
                }
            }
            out
        }
    }
}
