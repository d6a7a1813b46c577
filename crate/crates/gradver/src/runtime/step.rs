//! Small-step concrete execution.
//!
//! The interpreter always tracks, per stack frame, the verifier state it is
//! in: that is where call- and loop-site exclusion frames live, and in
//! guarded mode also the residual checks that replace contract assertions.
//! Branches are matched by evaluating the source-level decisions recorded on
//! the graph edges.
//!
//! Full mode asserts every contract formula; guarded mode evaluates only the
//! edge checks. Footprint transfers at calls and loops are identical in both
//! modes.

use super::assert::{assert_formula, efoot, eval_expr, foot, framed, Rcx};
use super::{Env, Heap, PermSet, Stuck, Value};
use crate::ast::{Expr, Formula, FormulaKind, GFormula, Program, Stmt, StmtKind};
use crate::span::Span;
use crate::verifier::explore::FINAL_SITE;
use crate::verifier::{CheckExpr, Succ, VerifyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    Guarded,
}

#[derive(Debug, Clone)]
pub struct RunOpts {
    pub mode: Mode,
    pub no_exclusion_frames: bool,
    pub trace: bool,
    pub step_limit: usize,
}

impl Default for RunOpts {
    fn default() -> RunOpts {
        RunOpts { mode: Mode::Full, no_exclusion_frames: false, trace: false, step_limit: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Completed(Value),
    Stuck { span: Span, reason: String },
    CheckFailed { site: u32, span: Span, check: String },
    StepLimit,
}

impl Outcome {
    pub fn is_completed(&self) -> bool {
        matches!(self, Outcome::Completed(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// Executing a method body; the bottom frame is `main`.
    Method,
    /// Executing one iteration of a loop body.
    LoopBody,
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub perms: PermSet,
    pub env: Env,
    pub stmt: Stmt,
    pub kind: FrameKind,
    /// Index of the method graph this frame executes in.
    pub graph: usize,
    /// Current verifier state; `None` once tracking is lost (tolerated in
    /// full mode, fatal in guarded mode).
    pub state: Option<usize>,
    /// Candidate edge indices left pending while suspended at a call; the
    /// edge is committed after the call returns, when the result-dependent
    /// decisions become evaluable.
    pub pending: Vec<usize>,
}

pub struct RunResult {
    pub outcome: Outcome,
    pub steps: usize,
    pub trace: Vec<String>,
    pub checks_evaluated: usize,
}

/// Observable interpreter events, in execution order. Co-execution replays
/// these to keep a valuation and a verifier state per stack frame.
#[derive(Debug, Clone)]
pub enum Event {
    /// A frame was pushed (program start, call entry, loop-body entry) and
    /// matched the given verifier entry state.
    Push { kind: FrameKind, graph: usize, state: Option<usize> },
    /// The current top frame committed a graph edge (None: tracking lost).
    Commit { graph: usize, edge: Option<usize> },
    /// A frame consumed its final obligation (method post or loop
    /// invariant) along the given final edge; env and perms are the frame's
    /// values at that moment, captured because the frame pops right after.
    Final { graph: usize, edge: Option<usize>, env: Env, perms: PermSet },
    /// The top frame returned (call exit or end of a loop iteration).
    Pop,
}

pub struct Interp<'p> {
    pub cx: Rcx<'p>,
    pub report: &'p VerifyReport,
    pub opts: RunOpts,
    pub heap: Heap,
    pub stack: Vec<Frame>,
    pub steps: usize,
    pub trace: Vec<String>,
    pub checks_evaluated: usize,
    pub events: Vec<Event>,
}

/// Execute `main` to completion (or stop) and report the outcome.
pub fn run(program: &Program, report: &'_ VerifyReport, opts: RunOpts) -> RunResult {
    match Interp::new(program, report, opts) {
        Ok(mut interp) => {
            let outcome = interp.run_to_end();
            RunResult {
                outcome,
                steps: interp.steps,
                trace: interp.trace,
                checks_evaluated: interp.checks_evaluated,
            }
        }
        Err(reason) => RunResult {
            outcome: Outcome::Stuck { span: Span::default(), reason },
            steps: 0,
            trace: Vec::new(),
            checks_evaluated: 0,
        },
    }
}

impl<'p> Interp<'p> {
    pub fn new(
        program: &'p Program,
        report: &'p VerifyReport,
        opts: RunOpts,
    ) -> Result<Interp<'p>, String> {
        let main = program.entry().ok_or("program has no main method")?;
        if !main.params.is_empty() {
            return Err("main must not take parameters".to_string());
        }
        let graph = graph_index(report, "main").ok_or("no verification graph for main")?;
        let mut interp = Interp {
            cx: Rcx::new(program),
            report,
            opts,
            heap: Heap::new(),
            stack: Vec::new(),
            steps: 0,
            trace: Vec::new(),
            checks_evaluated: 0,
            events: Vec::new(),
        };
        let env = Env::new();
        let state = interp.select_entry(&report.graphs[graph].entry, graph, &env);
        interp.events.push(Event::Push { kind: FrameKind::Method, graph, state });
        interp.stack.push(Frame {
            perms: PermSet::new(),
            env,
            stmt: Stmt::seq(main.body.clone(), Stmt::skip()).normalize(),
            kind: FrameKind::Method,
            graph,
            state,
            pending: Vec::new(),
        });
        Ok(interp)
    }

    pub fn run_to_end(&mut self) -> Outcome {
        loop {
            match self.step_once() {
                Some(outcome) => return outcome,
                None => continue,
            }
        }
    }

    /// Execute one step; `Some` means execution finished or stopped.
    pub fn step_once(&mut self) -> Option<Outcome> {
        if self.steps >= self.opts.step_limit {
            return Some(Outcome::StepLimit);
        }
        self.steps += 1;
        let frame = self.stack.last().expect("non-empty stack");
        let stmt = frame.stmt.normalize();
        if stmt.is_skip() {
            return match frame.kind {
                FrameKind::LoopBody => self.while_finish().err(),
                FrameKind::Method if self.stack.len() == 1 => Some(self.finish_program()),
                FrameKind::Method => self.call_exit().err(),
            };
        }
        let (head, tail) = stmt.uncons();
        self.exec_head(&head, &tail).err()
    }

    // -- graph plumbing ----------------------------------------------------

    fn guarded(&self) -> bool {
        self.opts.mode == Mode::Guarded
    }

    fn decisions_hold(&self, env: &Env, decisions: &[(Expr, bool)]) -> bool {
        decisions.iter().all(|(e, taken)| {
            matches!(eval_expr(&self.heap, env, e), Ok(Value::Bool(b)) if b == *taken)
        })
    }

    /// Edge indices out of the frame's current state whose pre-step
    /// decisions hold in the frame's environment.
    fn candidates(&self, frame: &Frame) -> Vec<usize> {
        let Some(sid) = frame.state else { return Vec::new() };
        let g = &self.report.graphs[frame.graph];
        g.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.from == sid && self.decisions_hold(&frame.env, &e.pre_decisions))
            .map(|(i, _)| i)
            .collect()
    }

    fn select_entry(
        &self,
        entries: &[(usize, Vec<(Expr, bool)>)],
        _graph: usize,
        env: &Env,
    ) -> Option<usize> {
        entries.iter().find(|(_, ds)| self.decisions_hold(env, ds)).map(|(sid, _)| *sid)
    }

    /// Guarded mode cannot continue without a matching verified branch.
    fn no_branch(&self, span: Span) -> Stuck {
        Stuck::new(span, "no verified branch matches the concrete execution")
    }

    // -- check evaluation --------------------------------------------------

    fn src_footprint(&self, env: &Env, src: &CheckExpr) -> Result<PermSet, Stuck> {
        match src {
            CheckExpr::Acc(e, field) => match eval_expr(&self.heap, env, e)? {
                Value::Ref(l) => Ok([(l, field.clone())].into_iter().collect()),
                _ => Ok(PermSet::new()),
            },
            CheckExpr::Pred(name, args) => {
                let f = Formula {
                    span: Span::default(),
                    kind: FormulaKind::Pred(name.clone(), args.clone()),
                };
                efoot(&self.cx, &self.heap, env, &GFormula::precise(f))
            }
            CheckExpr::Expr(_) | CheckExpr::Bottom => Ok(PermSet::new()),
            CheckExpr::Sep(a, b) => {
                let mut out = PermSet::new();
                for s in a.iter().chain(b) {
                    out.extend(self.src_footprint(env, s)?);
                }
                Ok(out)
            }
        }
    }

    fn eval_check(&mut self, perms: &PermSet, env: &Env, src: &CheckExpr) -> Result<bool, Stuck> {
        self.checks_evaluated += 1;
        match src {
            CheckExpr::Expr(e) => Ok(eval_expr(&self.heap, env, e)? == Value::Bool(true)),
            CheckExpr::Acc(e, field) => match eval_expr(&self.heap, env, e)? {
                Value::Ref(l) => Ok(perms.contains(&(l, field.clone()))),
                _ => Ok(false),
            },
            CheckExpr::Pred(name, args) => {
                let f = Formula {
                    span: Span::default(),
                    kind: FormulaKind::Pred(name.clone(), args.clone()),
                };
                assert_formula(&self.cx, &self.heap, perms, env, &GFormula::precise(f))
            }
            CheckExpr::Sep(a, b) => {
                let mut fa = PermSet::new();
                for s in a {
                    fa.extend(self.src_footprint(env, s)?);
                }
                let mut fb = PermSet::new();
                for s in b {
                    fb.extend(self.src_footprint(env, s)?);
                }
                Ok(fa.is_disjoint(&fb))
            }
            CheckExpr::Bottom => Ok(false),
        }
    }

    /// Evaluate the checks of an edge (guarded mode only); a failing check
    /// stops execution.
    fn guard_edge(
        &mut self,
        edge_ix: Option<usize>,
        graph: usize,
        perms: &PermSet,
        env: &Env,
    ) -> Result<(), Outcome> {
        if !self.guarded() {
            return Ok(());
        }
        let Some(ix) = edge_ix else { return Ok(()) };
        let edge = self.report.graphs[graph].edges[ix].clone();
        for c in &edge.checks {
            match self.eval_check(perms, env, &c.src) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(Outcome::CheckFailed {
                        site: edge.site,
                        span: edge.span,
                        check: c.src.to_string(),
                    })
                }
                Err(s) => return Err(self.stuck(s)),
            }
        }
        Ok(())
    }

    /// Exclusion frame of an edge, evaluated against the given environment.
    fn exclusion_frame(&self, edge_ix: Option<usize>, graph: usize, env: &Env) -> PermSet {
        let mut out = PermSet::new();
        if self.opts.no_exclusion_frames {
            return out;
        }
        let Some(ix) = edge_ix else { return out };
        for (_, src) in &self.report.graphs[graph].edges[ix].exclusion {
            if let Some(src) = src {
                if let Ok(fp) = self.src_footprint(env, src) {
                    out.extend(fp);
                }
            }
        }
        out
    }

    // -- premise helpers ---------------------------------------------------

    fn stuck(&self, s: Stuck) -> Outcome {
        Outcome::Stuck { span: s.span(), reason: s.to_string() }
    }

    fn require_framed(&self, perms: &PermSet, env: &Env, e: &Expr) -> Result<(), Outcome> {
        match framed(&self.heap, perms, env, e) {
            Ok(true) => Ok(()),
            Ok(false) => Err(Outcome::Stuck {
                span: e.span,
                reason: format!("expression {} is not framed by the owned permissions", e),
            }),
            Err(s) => Err(self.stuck(s)),
        }
    }

    fn require_assert(
        &self,
        perms: &PermSet,
        env: &Env,
        phi: &GFormula,
        what: &str,
    ) -> Result<(), Outcome> {
        match assert_formula(&self.cx, &self.heap, perms, env, phi) {
            Ok(true) => Ok(()),
            Ok(false) => Err(Outcome::Stuck {
                span: phi.span,
                reason: format!("{} {} does not hold", what, phi),
            }),
            Err(s) => Err(self.stuck(s)),
        }
    }

    fn tracev(&mut self, rule: &str, site: u32) {
        if self.opts.trace {
            let f = self.stack.last().unwrap();
            self.trace.push(format!(
                "⟨{}, {}, {}, {}⟩",
                rule,
                site,
                f.perms.len(),
                self.stack.len()
            ));
        }
    }

    /// Commit the frame to the successor state of `edge_ix` and advance its
    /// statement to `next`.
    fn advance(
        &mut self,
        edge_ix: Option<usize>,
        next: Stmt,
        span: Span,
    ) -> Result<(), Outcome> {
        let graph = self.stack.last().unwrap().graph;
        let state = match edge_ix {
            Some(ix) => match self.report.graphs[graph].edges[ix].to {
                Succ::State(s) => Some(s),
                Succ::Final => None,
            },
            None if self.guarded() => return Err(self.stuck(self.no_branch(span))),
            None => None,
        };
        let frame = self.stack.last_mut().unwrap();
        frame.state = state;
        frame.stmt = next;
        self.events.push(Event::Commit { graph, edge: edge_ix });
        Ok(())
    }

    // -- statement dispatch ------------------------------------------------

    fn exec_head(&mut self, head: &Stmt, tail: &Stmt) -> Result<(), Outcome> {
        let frame = self.stack.last().unwrap().clone();
        let cands = self.candidates(&frame);
        let lead = cands.first().copied();
        match head.kind() {
            StmtKind::Skip | StmtKind::Seq(..) => {
                // Parsed skips are dropped by normalization; a residual one
                // steps silently.
                self.tracev("seq", head.id());
                self.advance(lead, tail.clone(), head.span())
            }
            StmtKind::Assign(x, e) => {
                self.guard_edge(lead, frame.graph, &frame.perms, &frame.env)?;
                self.require_framed(&frame.perms, &frame.env, e)?;
                let v = eval_expr(&self.heap, &frame.env, e).map_err(|s| self.stuck(s))?;
                self.tracev("assign", head.id());
                self.stack.last_mut().unwrap().env.insert(x.clone(), v);
                self.advance(lead, tail.clone(), head.span())
            }
            StmtKind::AssignField(x, f, e) => {
                self.guard_edge(lead, frame.graph, &frame.perms, &frame.env)?;
                let l = match frame.env.get(x) {
                    Some(Value::Ref(l)) => *l,
                    Some(Value::Null) => {
                        return Err(Outcome::Stuck {
                            span: head.span(),
                            reason: "null dereference".to_string(),
                        })
                    }
                    _ => {
                        return Err(Outcome::Stuck {
                            span: head.span(),
                            reason: format!("{} is not a reference", x),
                        })
                    }
                };
                if !frame.perms.contains(&(l, f.clone())) {
                    return Err(Outcome::Stuck {
                        span: head.span(),
                        reason: format!("missing permission to write {}.{}", x, f),
                    });
                }
                self.require_framed(&frame.perms, &frame.env, e)?;
                let v = eval_expr(&self.heap, &frame.env, e).map_err(|s| self.stuck(s))?;
                self.heap.write(l, f, v);
                self.tracev("assign-field", head.id());
                self.advance(lead, tail.clone(), head.span())
            }
            StmtKind::Alloc(x, struct_name) => {
                let sd = self.cx.program.struct_def(struct_name).ok_or_else(|| Outcome::Stuck {
                    span: head.span(),
                    reason: format!("unknown struct {}", struct_name),
                })?;
                let (l, new_perms) = self.heap.alloc(struct_name, &sd.fields.clone());
                self.tracev("alloc", head.id());
                let frame = self.stack.last_mut().unwrap();
                frame.perms.extend(new_perms);
                frame.env.insert(x.clone(), Value::Ref(l));
                self.advance(lead, tail.clone(), head.span())
            }
            StmtKind::Call(y, m, args) => self.call_enter(head, &cands, y, m, args),
            StmtKind::Assert(f) => {
                self.guard_edge(lead, frame.graph, &frame.perms, &frame.env)?;
                if !self.guarded() {
                    let phi = GFormula { span: f.span, imprecise: true, body: f.clone() };
                    self.require_assert(&frame.perms, &frame.env, &phi, "assertion")?;
                }
                self.tracev("assert", head.id());
                self.advance(lead, tail.clone(), head.span())
            }
            StmtKind::Fold(..) => {
                self.guard_edge(lead, frame.graph, &frame.perms, &frame.env)?;
                self.tracev("fold", head.id());
                self.advance(lead, tail.clone(), head.span())
            }
            StmtKind::Unfold(..) => {
                self.guard_edge(lead, frame.graph, &frame.perms, &frame.env)?;
                self.tracev("unfold", head.id());
                self.advance(lead, tail.clone(), head.span())
            }
            StmtKind::If(e, s1, s2) => {
                self.guard_edge(lead, frame.graph, &frame.perms, &frame.env)?;
                self.require_framed(&frame.perms, &frame.env, e)?;
                let b = match eval_expr(&self.heap, &frame.env, e) {
                    Ok(Value::Bool(b)) => b,
                    Ok(v) => {
                        return Err(Outcome::Stuck {
                            span: e.span,
                            reason: format!("condition evaluated to {}", v),
                        })
                    }
                    Err(s) => return Err(self.stuck(s)),
                };
                self.tracev(if b { "if-true" } else { "if-false" }, head.id());
                let branch = if b { s1 } else { s2 };
                let next = Stmt::seq(branch.clone(), tail.clone()).normalize();
                self.advance(lead, next, head.span())
            }
            StmtKind::While(e, inv, body) => self.while_head(head, tail, &cands, e, inv, body),
        }
    }

    // -- calls -------------------------------------------------------------

    fn call_enter(
        &mut self,
        head: &Stmt,
        cands: &[usize],
        _y: &str,
        m: &str,
        args: &[Expr],
    ) -> Result<(), Outcome> {
        let frame = self.stack.last().unwrap().clone();
        let method = self
            .cx
            .program
            .method(m)
            .ok_or_else(|| Outcome::Stuck {
                span: head.span(),
                reason: format!("unknown method {}", m),
            })?
            .clone();
        let lead = cands.first().copied();
        self.guard_edge(lead, frame.graph, &frame.perms, &frame.env)?;

        let mut callee_env = Env::new();
        for ((_, x), a) in method.params.iter().zip(args) {
            self.require_framed(&frame.perms, &frame.env, a)?;
            let v = eval_expr(&self.heap, &frame.env, a).map_err(|s| self.stuck(s))?;
            callee_env.insert(x.clone(), v);
        }

        let excluded = self.exclusion_frame(lead, frame.graph, &frame.env);
        let avail: PermSet = frame.perms.difference(&excluded).cloned().collect();
        if !self.guarded() {
            self.require_assert(&avail, &callee_env, &method.pre, "pre-condition")?;
        }
        let transferred: PermSet = foot(&self.cx, &self.heap, &avail, &callee_env, &method.pre)
            .map_err(|s| self.stuck(s))?
            .intersection(&avail)
            .cloned()
            .collect();

        let callee_graph = graph_index(self.report, m).ok_or_else(|| Outcome::Stuck {
            span: head.span(),
            reason: format!("no verification graph for {}", m),
        })?;
        let state =
            self.select_entry(&self.report.graphs[callee_graph].entry, callee_graph, &callee_env);
        if state.is_none() && self.guarded() {
            return Err(self.stuck(self.no_branch(head.span())));
        }

        self.tracev("call-enter", head.id());
        {
            let caller = self.stack.last_mut().unwrap();
            caller.perms = caller.perms.difference(&transferred).cloned().collect();
            caller.pending = cands.to_vec();
        }
        self.events.push(Event::Push { kind: FrameKind::Method, graph: callee_graph, state });
        self.stack.push(Frame {
            perms: transferred,
            env: callee_env,
            stmt: Stmt::seq(method.body.clone(), Stmt::skip()).normalize(),
            kind: FrameKind::Method,
            graph: callee_graph,
            state,
            pending: Vec::new(),
        });
        Ok(())
    }

    fn call_exit(&mut self) -> Result<(), Outcome> {
        let callee = self.stack.last().unwrap().clone();
        let caller = self.stack[self.stack.len() - 2].clone();
        let (call_head, call_tail) = caller.stmt.normalize().uncons();
        let StmtKind::Call(y, m, _) = call_head.kind() else {
            return Err(Outcome::Stuck {
                span: call_head.span(),
                reason: "caller frame is not suspended at a call".to_string(),
            });
        };
        let method = self.cx.program.method(m).unwrap().clone();

        let fin = self.final_edge(&callee);
        if self.guarded() {
            self.guard_edge(fin, callee.graph, &callee.perms, &callee.env)?;
            if fin.is_none() && callee.state.is_some() {
                return Err(self.stuck(self.no_branch(method.post.span)));
            }
        } else {
            self.require_assert(&callee.perms, &callee.env, &method.post, "post-condition")?;
        }
        self.events.push(Event::Final {
            graph: callee.graph,
            edge: fin,
            env: callee.env.clone(),
            perms: callee.perms.clone(),
        });

        let result = *callee.env.get("result").ok_or_else(|| Outcome::Stuck {
            span: method.post.span,
            reason: format!("{} finished without assigning result", m),
        })?;
        // The caller regains everything the callee still owns, not only the
        // post-condition's footprint: permissions are conserved, so leftover
        // permissions of a callee with a weak post-condition flow back
        // instead of leaking.
        let returned = callee.perms.clone();

        self.tracev("call-exit", call_head.id());
        self.events.push(Event::Pop);
        self.stack.pop();
        let frame = self.stack.last_mut().unwrap();
        frame.perms.extend(returned);
        frame.env.insert(y.clone(), result);
        let pending = std::mem::take(&mut frame.pending);
        let frame = self.stack.last().unwrap().clone();
        // Commit the call edge now that the result-dependent decisions can
        // be evaluated.
        let committed = pending.into_iter().find(|ix| {
            let e = &self.report.graphs[frame.graph].edges[*ix];
            self.decisions_hold(&frame.env, &e.post_decisions)
        });
        self.advance(committed, call_tail, call_head.span())
    }

    /// The final (contract-consuming) edge matching the frame's state and
    /// environment.
    fn final_edge(&self, frame: &Frame) -> Option<usize> {
        let sid = frame.state?;
        self.report.graphs[frame.graph]
            .edges
            .iter()
            .enumerate()
            .find(|(_, e)| {
                e.from == sid
                    && e.site == FINAL_SITE
                    && self.decisions_hold(&frame.env, &e.pre_decisions)
            })
            .map(|(i, _)| i)
    }

    // -- loops -------------------------------------------------------------

    #[allow(clippy::too_many_arguments)]
    fn while_head(
        &mut self,
        head: &Stmt,
        tail: &Stmt,
        cands: &[usize],
        e: &Expr,
        inv: &GFormula,
        body: &Stmt,
    ) -> Result<(), Outcome> {
        let frame = self.stack.last().unwrap().clone();
        self.require_framed(&frame.perms, &frame.env, e)?;
        let b = match eval_expr(&self.heap, &frame.env, e) {
            Ok(Value::Bool(b)) => b,
            Ok(v) => {
                return Err(Outcome::Stuck {
                    span: e.span,
                    reason: format!("loop condition evaluated to {}", v),
                })
            }
            Err(s) => return Err(self.stuck(s)),
        };
        let lead = cands.first().copied();
        let excluded = self.exclusion_frame(lead, frame.graph, &frame.env);
        let avail: PermSet = frame.perms.difference(&excluded).cloned().collect();

        if b {
            // Enter one iteration: the invariant holds going in and the body
            // gets its footprint.
            self.guard_edge(lead, frame.graph, &avail, &frame.env)?;
            if !self.guarded() {
                self.require_assert(&avail, &frame.env, inv, "loop invariant")?;
            }
            let transferred: PermSet = foot(&self.cx, &self.heap, &avail, &frame.env, inv)
                .map_err(|s| self.stuck(s))?
                .intersection(&avail)
                .cloned()
                .collect();
            let state = frame.state.and_then(|sid| {
                let g = &self.report.graphs[frame.graph];
                g.loop_entries.get(&sid).and_then(|entries| {
                    self.select_entry(entries, frame.graph, &frame.env)
                })
            });
            if state.is_none() && self.guarded() {
                return Err(self.stuck(self.no_branch(head.span())));
            }
            self.tracev("while-enter", head.id());
            {
                let caller = self.stack.last_mut().unwrap();
                caller.perms = caller.perms.difference(&transferred).cloned().collect();
            }
            self.events.push(Event::Push { kind: FrameKind::LoopBody, graph: frame.graph, state });
            self.stack.push(Frame {
                perms: transferred,
                env: frame.env.clone(),
                stmt: Stmt::seq(body.clone(), Stmt::skip()).normalize(),
                kind: FrameKind::LoopBody,
                graph: frame.graph,
                state,
                pending: Vec::new(),
            });
            Ok(())
        } else {
            // Exit the loop: the invariant holds one final time. The edge is
            // selected with the havoc-dependent decisions included, which
            // are evaluable here.
            let sel = cands.iter().copied().find(|ix| {
                let edge = &self.report.graphs[frame.graph].edges[*ix];
                self.decisions_hold(&frame.env, &edge.post_decisions)
            });
            self.guard_edge(sel, frame.graph, &avail, &frame.env)?;
            if !self.guarded() {
                self.require_assert(&avail, &frame.env, inv, "loop invariant")?;
            }
            self.tracev("while-skip", head.id());
            self.advance(sel, tail.clone(), head.span())
        }
    }

    fn while_finish(&mut self) -> Result<(), Outcome> {
        let body_frame = self.stack.last().unwrap().clone();
        let below = self.stack[self.stack.len() - 2].clone();
        let (while_head, _) = below.stmt.normalize().uncons();
        let StmtKind::While(_, inv, _) = while_head.kind() else {
            return Err(Outcome::Stuck {
                span: while_head.span(),
                reason: "suspended frame is not at a loop".to_string(),
            });
        };
        let inv = inv.clone();

        let fin = self.final_edge(&body_frame);
        if self.guarded() {
            self.guard_edge(fin, body_frame.graph, &body_frame.perms, &body_frame.env)?;
            if fin.is_none() && body_frame.state.is_some() {
                return Err(self.stuck(self.no_branch(inv.span)));
            }
        } else {
            self.require_assert(&body_frame.perms, &body_frame.env, &inv, "loop invariant")?;
        }
        // As at call exits, the whole remaining permission set flows back.
        let returned = body_frame.perms.clone();

        self.tracev("while-finish", while_head.id());
        self.events.push(Event::Final {
            graph: body_frame.graph,
            edge: fin,
            env: body_frame.env.clone(),
            perms: body_frame.perms.clone(),
        });
        self.events.push(Event::Pop);
        self.stack.pop();
        let frame = self.stack.last_mut().unwrap();
        frame.perms.extend(returned);
        // The loop body's final environment carries over to the next
        // arrival at the loop head.
        frame.env = body_frame.env;
        Ok(())
    }

    // -- program end -------------------------------------------------------

    fn finish_program(&mut self) -> Outcome {
        let frame = self.stack.last().unwrap().clone();
        let main = self.cx.program.entry().unwrap().clone();
        let fin = self.final_edge(&frame);
        if self.guarded() {
            if let Err(o) = self.guard_edge(fin, frame.graph, &frame.perms, &frame.env) {
                return o;
            }
            if fin.is_none() && frame.state.is_some() {
                return self.stuck(self.no_branch(main.post.span));
            }
        } else if let Err(o) =
            self.require_assert(&frame.perms, &frame.env, &main.post, "post-condition")
        {
            return o;
        }
        self.tracev("final", FINAL_SITE);
        self.events.push(Event::Final {
            graph: frame.graph,
            edge: fin,
            env: frame.env.clone(),
            perms: frame.perms.clone(),
        });
        match frame.env.get("result") {
            Some(v) => Outcome::Completed(*v),
            None => Outcome::Stuck {
                span: main.post.span,
                reason: "main finished without assigning result".to_string(),
            },
        }
    }
}

fn graph_index(report: &VerifyReport, method: &str) -> Option<usize> {
    report.graphs.iter().position(|g| g.method == method)
}
