//! Reachable-state exploration and the verification report.
//!
//! Each method is explored into a graph of symbolic states. Loop bodies are
//! verified modularly: every reachable loop-head state spawns a body
//! component that assumes the invariant and must re-establish it. Edges
//! carry the run-time checks and exclusion frames computed for the step they
//! represent, plus the source-level decisions that identify the branch.

use super::check::{dedup_checks, CheckExpr, CheckKind};
use super::consume::consume;
use super::exec::{step, StepOut};
use super::produce::produce;
use super::{Check, Decision, Provenance, Subst, Vcx};
use crate::ast::{GFormula, MethodDef, Program, Stmt, StmtKind, SYNTHETIC};
use crate::span::Span;
use crate::symbolic::{SymPerm, SymState, Term};
use std::collections::{BTreeMap, VecDeque};

/// Pseudo-site for a method's (or loop body's) final contract consumption.
pub const FINAL_SITE: u32 = u32::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Succ {
    State(usize),
    Final,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub from: usize,
    pub to: Succ,
    pub site: u32,
    pub span: Span,
    pub checks: Vec<Check>,
    pub pre_decisions: Vec<Decision>,
    pub post_decisions: Vec<Decision>,
    pub exclusion: Vec<(SymPerm, Option<CheckExpr>)>,
    pub branch_pc: Vec<Term>,
}

#[derive(Debug, Clone)]
pub struct StateNode {
    pub id: usize,
    pub st: SymState,
    pub stmt: Stmt,
    /// The obligation consumed when this state reaches `skip`: the method's
    /// post-condition, or the invariant inside a loop-body component.
    pub post: GFormula,
    /// Statement id of the enclosing `while` for loop-body states.
    pub in_loop: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct MethodGraph {
    pub method: String,
    /// Entry states (one per branch of producing the pre-condition).
    pub entry: Vec<(usize, Vec<Decision>)>,
    pub states: Vec<StateNode>,
    pub edges: Vec<Edge>,
    /// Loop-body entry states, keyed by the loop-head state they serve.
    pub loop_entries: BTreeMap<usize, Vec<(usize, Vec<Decision>)>>,
}

impl MethodGraph {
    pub fn edges_from(&self, state: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == state)
    }
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub method: String,
    pub span: Span,
    pub site: u32,
    pub msg: String,
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub states: usize,
    pub edges: usize,
    pub pruned: usize,
    pub pruned_by_site: BTreeMap<u32, usize>,
}

#[derive(Debug)]
pub struct VerifyReport {
    pub graphs: Vec<MethodGraph>,
    pub failures: Vec<Failure>,
    pub diagnostics: Vec<String>,
    pub stats: Stats,
    pub prov: BTreeMap<u32, Provenance>,
}

impl VerifyReport {
    pub fn graph(&self, method: &str) -> Option<&MethodGraph> {
        self.graphs.iter().find(|g| g.method == method)
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn verify(program: &Program, no_prune: bool) -> VerifyReport {
    let mut cx = Vcx::new(program);
    cx.no_prune = no_prune;
    let mut graphs = Vec::new();
    let mut failures = Vec::new();
    for m in &program.methods {
        let graph = explore_method(&mut cx, m, &mut failures);
        graphs.push(graph);
    }
    let mut stats = Stats {
        states: graphs.iter().map(|g| g.states.len()).sum(),
        edges: graphs.iter().map(|g| g.edges.len()).sum(),
        pruned: cx.pruned.len(),
        ..Stats::default()
    };
    for (site, _) in &cx.pruned {
        *stats.pruned_by_site.entry(*site).or_default() += 1;
    }
    VerifyReport {
        graphs,
        failures,
        diagnostics: cx.diagnostics.clone(),
        stats,
        prov: cx.prov.clone(),
    }
}

fn explore_method(cx: &mut Vcx, m: &MethodDef, failures: &mut Vec<Failure>) -> MethodGraph {
    let mut graph = MethodGraph {
        method: m.name.clone(),
        entry: Vec::new(),
        states: Vec::new(),
        edges: Vec::new(),
        loop_entries: BTreeMap::new(),
    };
    let id = Subst::identity();
    cx.cur_site = (SYNTHETIC, m.span);

    let mut init = SymState::empty();
    for (_, x) in &m.params {
        let t = cx.fresh_sym(Provenance::Param { method: m.name.clone(), var: x.clone() });
        init.store.insert(x.clone(), t);
    }
    let body = Stmt::seq(m.body.clone(), Stmt::skip()).normalize();
    let mut work = VecDeque::new();
    for b in produce(cx, init, &m.pre, &id) {
        let sid = push_state(&mut graph, b.st, body.clone(), m.post.clone(), None);
        graph.entry.push((sid, b.decisions));
        work.push_back(sid);
    }

    while let Some(sid) = work.pop_front() {
        let node = graph.states[sid].clone();
        if node.stmt.is_skip() {
            // Consume the state's obligation; this is the method exit or the
            // end of a loop iteration.
            cx.cur_site = (FINAL_SITE, node.post.span);
            let branches = consume(cx, &node.st, &node.post.clone(), &id);
            let all_bottom = !branches.is_empty() && branches.iter().all(|b| b.has_bottom());
            for b in branches {
                graph.edges.push(Edge {
                    from: sid,
                    to: Succ::Final,
                    site: FINAL_SITE,
                    span: node.post.span,
                    checks: dedup_checks(b.checks),
                    pre_decisions: b.decisions,
                    post_decisions: Vec::new(),
                    exclusion: Vec::new(),
                    branch_pc: b.st.pc,
                });
            }
            if all_bottom {
                failures.push(Failure {
                    method: m.name.clone(),
                    span: node.post.span,
                    site: FINAL_SITE,
                    msg: format!("cannot establish {}", node.post),
                });
            }
            continue;
        }

        let head = node.stmt.head().clone();
        if let StmtKind::While(e, inv, body_s) = head.kind() {
            spawn_loop_body(cx, &mut graph, &mut work, sid, &head, e, inv, body_s, failures, m);
        }
        let outs = step(cx, &node.st, &node.stmt);
        record_outs(cx, &mut graph, &mut work, sid, &head, outs, &node, failures, m);
    }
    graph
}

#[allow(clippy::too_many_arguments)]
fn spawn_loop_body(
    cx: &mut Vcx,
    graph: &mut MethodGraph,
    work: &mut VecDeque<usize>,
    head_sid: usize,
    head: &Stmt,
    e: &crate::ast::Expr,
    inv: &GFormula,
    body_s: &Stmt,
    failures: &mut Vec<Failure>,
    m: &MethodDef,
) {
    let id = Subst::identity();
    cx.cur_site = (head.id(), head.span());
    let node_st = graph.states[head_sid].st.clone();
    let mut modified = std::collections::BTreeSet::new();
    body_s.modified(&mut modified);
    let mut init = SymState::empty();
    init.store = node_st.store.clone();
    init.pc = node_st.pc.clone();
    for x in &modified {
        let t = cx.fresh_sym(Provenance::Havoc { var: x.clone(), site: head.id() });
        init.store.insert(x.clone(), t);
    }
    let mut entries = Vec::new();
    let branches = produce(cx, init, inv, &id);
    let all_bottom = !branches.is_empty() && branches.iter().all(|b| b.has_bottom());
    for b in branches {
        let (t, _) = super::eval::pc_eval(cx, &b.st, e, &id);
        let mut st = b.st;
        st.add_pc(t);
        if cx.prune(&st) {
            continue;
        }
        let body_stmt = Stmt::seq(body_s.clone(), Stmt::skip()).normalize();
        let sid = push_state(graph, st, body_stmt, inv.clone(), Some(head.id()));
        entries.push((sid, b.decisions));
        work.push_back(sid);
    }
    if all_bottom {
        failures.push(Failure {
            method: m.name.clone(),
            span: head.span(),
            site: head.id(),
            msg: format!("cannot assume loop invariant {}", inv),
        });
    }
    graph.loop_entries.insert(head_sid, entries);
}

#[allow(clippy::too_many_arguments)]
fn record_outs(
    _cx: &mut Vcx,
    graph: &mut MethodGraph,
    work: &mut VecDeque<usize>,
    sid: usize,
    head: &Stmt,
    outs: Vec<StepOut>,
    node: &StateNode,
    failures: &mut Vec<Failure>,
    m: &MethodDef,
) {
    let all_bottom = !outs.is_empty()
        && outs.iter().all(|o| o.checks.iter().any(|c| matches!(c.kind, CheckKind::Bottom)));
    for o in outs {
        let to = push_state(graph, o.st.clone(), o.stmt, node.post.clone(), node.in_loop);
        work.push_back(to);
        graph.edges.push(Edge {
            from: sid,
            to: Succ::State(to),
            site: head.id(),
            span: head.span(),
            checks: dedup_checks(o.checks),
            pre_decisions: o.pre_decisions,
            post_decisions: o.post_decisions,
            exclusion: o.exclusion,
            branch_pc: o.st.pc,
        });
    }
    if all_bottom {
        failures.push(Failure {
            method: m.name.clone(),
            span: head.span(),
            site: head.id(),
            msg: "all execution branches fail statically".to_string(),
        });
    }
}

fn push_state(
    graph: &mut MethodGraph,
    st: SymState,
    stmt: Stmt,
    post: GFormula,
    in_loop: Option<u32>,
) -> usize {
    let id = graph.states.len();
    graph.states.push(StateNode { id, st, stmt: stmt.normalize(), post, in_loop });
    id
}
