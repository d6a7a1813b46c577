//! Co-execution: run the guarded dynamic semantics in lock-step with the
//! verification state graph, maintain a valuation from symbolic to concrete
//! values per stack frame, and re-establish the state-correspondence
//! relations after every committed step.
//!
//! Violations are soundness findings:
//! - `progress`: the guarded run got stuck even though every evaluated check
//!   passed (the program was statically verified).
//! - `guard-totality`: no verified branch matched a concrete step.
//! - `store` / `heap-chunk` / `ownership` / `frame-disjointness` /
//!   `path-condition` / `branch-pc`: a correspondence relation between the
//!   matched symbolic state and the concrete state failed to hold.
//!
//! Notes record harness gaps (e.g. a symbolic value the valuation could not
//! cover), which are distinct from violations.

use crate::ast::Program;
use crate::runtime::{
    term_value, vfoot, CheckError, Env, Event, FrameKind, Heap, Interp, Mode, Outcome, PermSet,
    RunOpts, Valuation, Value,
};
use crate::symbolic::{Chunk, FieldChunk, SymPerm, SymState, Term};
use crate::verifier::{Provenance, Succ, VerifyReport};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone)]
pub struct Violation {
    pub step: usize,
    pub relation: String,
    pub detail: String,
}

#[derive(Debug)]
pub struct CoExecReport {
    pub outcome: Outcome,
    pub steps: usize,
    pub checks_evaluated: usize,
    /// Sites of the committed graph edges, in execution order.
    pub sites: Vec<u32>,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
    /// Final valuation of the bottom (entry) frame.
    pub valuation: Valuation,
}

impl CoExecReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct CoExecOpts {
    pub no_exclusion_frames: bool,
    pub step_limit: usize,
}

impl Default for CoExecOpts {
    fn default() -> CoExecOpts {
        CoExecOpts { no_exclusion_frames: false, step_limit: 100_000 }
    }
}

/// Guardedly execute `main`, replaying interpreter events against the state
/// graph, and report every correspondence violation.
pub fn coexecute(program: &Program, report: &VerifyReport, opts: CoExecOpts) -> CoExecReport {
    let run_opts = RunOpts {
        mode: Mode::Guarded,
        no_exclusion_frames: opts.no_exclusion_frames,
        trace: false,
        step_limit: opts.step_limit,
    };
    let mut interp = match Interp::new(program, report, run_opts) {
        Ok(i) => i,
        Err(reason) => {
            return CoExecReport {
                outcome: Outcome::Stuck { span: Default::default(), reason: reason.clone() },
                steps: 0,
                checks_evaluated: 0,
                sites: Vec::new(),
                violations: Vec::new(),
                notes: vec![format!("cannot start: {}", reason)],
                valuation: Valuation::new(),
            }
        }
    };
    let mut co = CoExec {
        report,
        vals: Vec::new(),
        processed: 0,
        violations: Vec::new(),
        notes: BTreeSet::new(),
        sites: Vec::new(),
    };
    co.drain(&mut interp); // the initial frame push

    let outcome = loop {
        match interp.step_once() {
            Some(o) => {
                co.drain(&mut interp);
                break o;
            }
            None => co.drain(&mut interp),
        }
    };

    if report.ok() {
        if let Outcome::Stuck { reason, span } = &outcome {
            let relation = if reason.contains("no verified branch") {
                "guard-totality"
            } else {
                "progress"
            };
            co.violations.push(Violation {
                step: interp.steps,
                relation: relation.to_string(),
                detail: format!("{}: {}", span, reason),
            });
        }
    }

    CoExecReport {
        outcome,
        steps: interp.steps,
        checks_evaluated: interp.checks_evaluated,
        sites: co.sites,
        violations: co.violations,
        notes: co.notes.into_iter().collect(),
        valuation: co.vals.into_iter().next().unwrap_or_default(),
    }
}

struct CoExec<'p> {
    report: &'p VerifyReport,
    /// One valuation per dynamic stack frame.
    vals: Vec<Valuation>,
    processed: usize,
    violations: Vec<Violation>,
    notes: BTreeSet<String>,
    sites: Vec<u32>,
}

impl<'p> CoExec<'p> {
    fn drain(&mut self, interp: &mut Interp<'_>) {
        while self.processed < interp.events.len() {
            let ev = interp.events[self.processed].clone();
            self.processed += 1;
            self.handle(interp, ev);
        }
    }

    fn handle(&mut self, interp: &Interp<'_>, ev: Event) {
        match ev {
            Event::Push { kind, graph, state } => {
                let base = match kind {
                    // A loop body shares the enclosing frame's symbolic
                    // vocabulary; each iteration re-matches the body states
                    // with a fresh extension on top of it.
                    FrameKind::LoopBody => self.vals.last().cloned().unwrap_or_default(),
                    FrameKind::Method => Valuation::new(),
                };
                self.vals.push(base);
                if let Some(sid) = state {
                    let frame = interp.stack.last().expect("frame just pushed");
                    let st = self.report.graphs[graph].states[sid].st.clone();
                    self.match_state(interp, graph, &st, &frame.env.clone(), &frame.perms.clone());
                }
            }
            Event::Commit { graph, edge } => {
                let Some(ix) = edge else {
                    self.notes.insert("verifier-state tracking lost on an edge".to_string());
                    return;
                };
                let e = self.report.graphs[graph].edges[ix].clone();
                self.sites.push(e.site);
                let frame = interp.stack.last().expect("committing frame");
                let (env, perms) = (frame.env.clone(), frame.perms.clone());
                match e.to {
                    Succ::State(sid) => {
                        let st = self.report.graphs[graph].states[sid].st.clone();
                        self.extend(interp, &st, &env);
                        self.check_branch_pc(interp, &e.branch_pc);
                        self.check_state(interp, &st, &env, &perms);
                    }
                    Succ::Final => self.check_branch_pc(interp, &e.branch_pc),
                }
            }
            Event::Final { graph, edge, env, perms: _ } => {
                let Some(ix) = edge else {
                    return;
                };
                let e = self.report.graphs[graph].edges[ix].clone();
                self.sites.push(e.site);
                // Consume may invent symbolic values (optimistic lookups);
                // bind what the frame's final state still determines before
                // evaluating the branch path condition.
                let st = self.report.graphs[graph].states[e.from].st.clone();
                self.extend(interp, &st, &env);
                self.bind_pc_equalities(&e.branch_pc, interp);
                self.check_branch_pc(interp, &e.branch_pc);
            }
            Event::Pop => {
                self.vals.pop();
            }
        }
    }

    fn violation(&mut self, interp: &Interp<'_>, relation: &str, detail: String) {
        self.violations.push(Violation {
            step: interp.steps,
            relation: relation.to_string(),
            detail,
        });
    }

    fn match_state(
        &mut self,
        interp: &Interp<'_>,
        _graph: usize,
        st: &SymState,
        env: &Env,
        perms: &PermSet,
    ) {
        self.extend(interp, st, env);
        self.check_state(interp, st, env, perms);
    }

    // -- valuation extension ------------------------------------------------

    /// Grow the top valuation monotonically with the bindings the concrete
    /// state determines for the symbolic values of `st`, following the
    /// per-rule fresh-value definitions (store lookup, heap lookup, value
    /// provenance, path-condition equalities).
    fn extend(&mut self, interp: &Interp<'_>, st: &SymState, env: &Env) {
        let heap = &interp.heap;
        let prov = &self.report.prov;
        loop {
            let mut changed = false;
            let v = self.vals.last_mut().expect("valuation for active frame");
            // Store: a variable mapped directly to a symbolic value.
            for (x, t) in &st.store {
                if let Term::Sym(s) = t {
                    if !v.contains_key(s) {
                        if let Some(val) = env.get(x) {
                            v.insert(*s, *val);
                            changed = true;
                        }
                    }
                }
            }
            // Heap chunks: value of a field whose receiver is already valued.
            for fc in st.field_chunks().chain(st.opt.iter()) {
                changed |= bind_chunk(v, heap, fc);
            }
            for (_, args) in st.pred_chunks() {
                // Predicate arguments are plain terms; nothing to bind here,
                // but their values may come from store/pc passes above.
                let _ = args;
            }
            // Path-condition equalities ν == t with t already valued.
            for c in &st.pc {
                changed |= bind_equality(v, c);
            }
            // Provenance: field lookups remember their receiver.
            let mut unbound = BTreeSet::new();
            syms_of_state(st, &mut unbound);
            for s in unbound {
                if self.vals.last().unwrap().contains_key(&s) {
                    continue;
                }
                if let Some(Provenance::FieldOf { recv, field }) = prov.get(&s) {
                    let v = self.vals.last_mut().unwrap();
                    if let Ok(Value::Ref(l)) = term_value(v, recv) {
                        if let Some(val) = heap.read(l, field) {
                            v.insert(s, val);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn bind_pc_equalities(&mut self, pc: &[Term], _interp: &Interp<'_>) {
        let v = self.vals.last_mut().expect("valuation for active frame");
        loop {
            let mut changed = false;
            for c in pc {
                changed |= bind_equality(v, c);
            }
            if !changed {
                break;
            }
        }
    }

    // -- correspondence relations -------------------------------------------

    fn check_state(&mut self, interp: &Interp<'_>, st: &SymState, env: &Env, perms: &PermSet) {
        let v = self.vals.last().expect("valuation for active frame").clone();
        // (1) Store modeling: every symbolically-tracked variable has the
        // value its term denotes.
        for (x, t) in &st.store {
            let Some(cv) = env.get(x) else {
                self.notes.insert(format!("store variable {} absent from the environment", x));
                continue;
            };
            match term_value(&v, t) {
                Ok(sv) if sv == *cv => {}
                Ok(sv) => self.violation(
                    interp,
                    "store",
                    format!("{} is {} but the symbolic state says {} = {}", x, cv, t, sv),
                ),
                Err(CheckError::Unvalued(s)) => {
                    self.notes.insert(format!("no valuation for ν{} (store {})", s, x));
                }
                Err(CheckError::Stuck(e)) => {
                    self.notes.insert(format!("store term for {}: {}", x, e));
                }
            }
        }
        // (2) Precise heap chunks: owned, disjoint, and value-accurate.
        let mut owned_by_chunks: BTreeMap<(u32, String), usize> = BTreeMap::new();
        for (i, c) in st.heap.iter().enumerate() {
            let foot = match c {
                Chunk::Field(fc) => {
                    self.check_field_chunk(interp, &v, fc, perms, true);
                    match term_value(&v, &fc.recv) {
                        Ok(Value::Ref(l)) => {
                            let mut s = PermSet::new();
                            s.insert((l, fc.field.clone()));
                            s
                        }
                        _ => continue,
                    }
                }
                Chunk::Pred { name, args } => {
                    let perm = SymPerm::Pred { name: name.clone(), args: args.clone() };
                    match vfoot(&interp.cx, &v, &interp.heap, &perm) {
                        Ok(f) => f,
                        Err(CheckError::Unvalued(s)) => {
                            self.notes.insert(format!(
                                "no valuation for ν{} (predicate {} footprint)",
                                s, name
                            ));
                            continue;
                        }
                        Err(CheckError::Stuck(_)) => continue,
                    }
                }
            };
            for loc in foot {
                if !perms.contains(&loc) {
                    self.violation(
                        interp,
                        "ownership",
                        format!("chunk {} claims ({}, {}) outside α", c, loc.0, loc.1),
                    );
                }
                if let Some(j) = owned_by_chunks.insert(loc.clone(), i) {
                    self.violation(
                        interp,
                        "frame-disjointness",
                        format!(
                            "precise chunks {} and {} overlap at ({}, {})",
                            st.heap[j], c, loc.0, loc.1
                        ),
                    );
                }
            }
        }
        // (3) Optimistic chunks may alias; only value-accuracy is required,
        // and only where the frame actually owns the location.
        for fc in &st.opt {
            self.check_field_chunk(interp, &v, fc, perms, false);
        }
        // (4) Path condition truth.
        for c in &st.pc {
            match term_value(&v, c) {
                Ok(Value::Bool(true)) => {}
                Ok(other) => self.violation(
                    interp,
                    "path-condition",
                    format!("{} evaluates to {}", c, other),
                ),
                Err(CheckError::Unvalued(s)) => {
                    self.notes.insert(format!("no valuation for ν{} (path condition {})", s, c));
                }
                Err(CheckError::Stuck(e)) => {
                    self.notes.insert(format!("path condition {}: {}", c, e));
                }
            }
        }
    }

    fn check_field_chunk(
        &mut self,
        interp: &Interp<'_>,
        v: &Valuation,
        fc: &FieldChunk,
        perms: &PermSet,
        precise: bool,
    ) {
        let Ok(rv) = term_value(v, &fc.recv) else {
            self.notes.insert(format!("unvalued receiver in chunk ⟨{}, {}⟩", fc.field, fc.recv));
            return;
        };
        let Value::Ref(l) = rv else {
            if precise {
                self.violation(
                    interp,
                    "heap-chunk",
                    format!("chunk receiver {} is {}, not a reference", fc.recv, rv),
                );
            }
            return;
        };
        if !precise && !perms.contains(&(l, fc.field.clone())) {
            return;
        }
        let Some(hv) = interp.heap.read(l, &fc.field) else {
            self.violation(
                interp,
                "heap-chunk",
                format!("no heap slot for ({}, {})", l, fc.field),
            );
            return;
        };
        match term_value(v, &fc.val) {
            Ok(sv) if sv == hv => {}
            Ok(sv) => self.violation(
                interp,
                "heap-chunk",
                format!("H({}, {}) = {} but the symbolic chunk says {}", l, fc.field, hv, sv),
            ),
            Err(CheckError::Unvalued(s)) => {
                self.notes.insert(format!("no valuation for ν{} (chunk value)", s));
            }
            Err(CheckError::Stuck(e)) => {
                self.notes.insert(format!("chunk value: {}", e));
            }
        }
    }

    fn check_branch_pc(&mut self, interp: &Interp<'_>, pc: &[Term]) {
        let v = self.vals.last().expect("valuation for active frame").clone();
        for c in pc {
            match term_value(&v, c) {
                Ok(Value::Bool(true)) => {}
                Ok(other) => self.violation(
                    interp,
                    "branch-pc",
                    format!("{} evaluates to {}", c, other),
                ),
                Err(CheckError::Unvalued(s)) => {
                    self.notes.insert(format!("no valuation for ν{} (branch pc {})", s, c));
                }
                Err(CheckError::Stuck(e)) => {
                    self.notes.insert(format!("branch pc {}: {}", c, e));
                }
            }
        }
    }
}

/// Bind the value term of a field chunk whose receiver is already valued.
fn bind_chunk(v: &mut Valuation, heap: &Heap, fc: &FieldChunk) -> bool {
    let Term::Sym(s) = &fc.val else { return false };
    if v.contains_key(s) {
        return false;
    }
    let Ok(Value::Ref(l)) = term_value(v, &fc.recv) else { return false };
    match heap.read(l, &fc.field) {
        Some(val) => {
            v.insert(*s, val);
            true
        }
        None => false,
    }
}

/// Bind ν from a top-level equality conjunct ν == t (or t == ν) whose other
/// side is already valued.
fn bind_equality(v: &mut Valuation, c: &Term) -> bool {
    let Term::Bin(op, a, b) = c else { return false };
    if *op != crate::ast::BinOp::Eq {
        return false;
    }
    for (s_side, t_side) in [(a, b), (b, a)] {
        if let Term::Sym(s) = &**s_side {
            if !v.contains_key(s) {
                if let Ok(val) = term_value(v, t_side) {
                    v.insert(*s, val);
                    return true;
                }
            }
        }
    }
    false
}

fn syms_of_state(st: &SymState, out: &mut BTreeSet<u32>) {
    for t in st.store.values() {
        t.syms(out);
    }
    for c in &st.heap {
        match c {
            Chunk::Field(fc) => {
                fc.recv.syms(out);
                fc.val.syms(out);
            }
            Chunk::Pred { args, .. } => {
                for a in args {
                    a.syms(out);
                }
            }
        }
    }
    for fc in &st.opt {
        fc.recv.syms(out);
        fc.val.syms(out);
    }
    for c in &st.pc {
        c.syms(out);
    }
}
