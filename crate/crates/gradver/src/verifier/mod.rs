//! Static verification by symbolic execution.
//!
//! The verifier explores every reachable symbolic state of each method,
//! recording per-edge run-time checks, branch decisions, and exclusion
//! frames. The resulting state graph drives both reporting and the guarded
//! interpreter.

pub mod check;
pub mod consume;
pub mod eval;
pub mod exec;
pub mod explore;
pub mod produce;

pub use check::{Check, CheckExpr, CheckKind, ThetaItem};
pub use explore::{verify, Edge, Failure, MethodGraph, StateNode, Succ, VerifyReport};

use crate::ast::{Expr, GFormula, Program};
use crate::span::Span;
use crate::symbolic::{Fresh, SymState, Term};
use std::collections::{BTreeMap, BTreeSet};

/// How a fresh symbolic value came to be. Co-execution uses this to extend
/// the valuation as concrete execution crosses the edge that introduced the
/// value.
#[derive(Debug, Clone)]
pub enum Provenance {
    /// Havocked method parameter.
    Param { method: String, var: String },
    /// Value of `recv.field` at introduction time; also covers values
    /// invented for heap chunks by formula production.
    FieldOf { recv: Term, field: String },
    /// Reference returned by an allocation at the given statement.
    AllocRef { site: u32 },
    /// Result value of a method call at the given statement.
    CallResult { site: u32 },
    /// Havocked loop-modified variable.
    Havoc { var: String, site: u32 },
}

/// A branch decision recorded while deriving an edge: the source-level
/// expression (already in caller vocabulary) and the truth value this branch
/// assumed for it.
pub type Decision = (Expr, bool);

/// Variable-to-expression substitution used to keep formula-level artifacts
/// (checks, decisions) phrased in the enclosing frame's vocabulary — e.g.
/// formal parameters become the call's argument expressions.
#[derive(Debug, Clone, Default)]
pub struct Subst {
    map: BTreeMap<String, Expr>,
}

impl Subst {
    pub fn identity() -> Subst {
        Subst::default()
    }

    pub fn bind(&mut self, var: &str, e: Expr) {
        self.map.insert(var.to_string(), e);
    }

    pub fn apply(&self, e: &Expr) -> Expr {
        if self.map.is_empty() {
            return e.clone();
        }
        e.subst(&|x| self.map.get(x).cloned())
    }
}

/// One branch of a non-deterministic derivation.
#[derive(Debug, Clone)]
pub struct Branch<T> {
    pub val: T,
    pub st: SymState,
    pub checks: Vec<Check>,
    pub decisions: Vec<Decision>,
}

impl<T> Branch<T> {
    pub fn new(val: T, st: SymState) -> Branch<T> {
        Branch { val, st, checks: Vec::new(), decisions: Vec::new() }
    }

    pub fn has_bottom(&self) -> bool {
        self.checks.iter().any(|c| matches!(c.kind, CheckKind::Bottom))
    }
}

/// Shared verification context: the program, the fresh-value allocator,
/// value provenance, and pruning bookkeeping.
pub struct Vcx<'p> {
    pub program: &'p Program,
    pub fresh: Fresh,
    pub prov: BTreeMap<u32, Provenance>,
    /// Branches discarded because their path condition became unsatisfiable,
    /// attributed to the statement being executed at the time.
    pub pruned: Vec<(u32, Span)>,
    pub cur_site: (u32, Span),
    pub no_prune: bool,
    /// Diagnostics that do not fail verification (e.g. exclusion-frame
    /// permissions with no derivable source anchor).
    pub diagnostics: Vec<String>,
    imprecise_preds: BTreeSet<String>,
}

impl<'p> Vcx<'p> {
    pub fn new(program: &'p Program) -> Vcx<'p> {
        let imprecise_preds = imprecise_predicates(program);
        Vcx {
            program,
            fresh: Fresh::new(),
            prov: BTreeMap::new(),
            pruned: Vec::new(),
            cur_site: (crate::ast::SYNTHETIC, Span::default()),
            no_prune: false,
            diagnostics: Vec::new(),
            imprecise_preds,
        }
    }

    pub fn fresh_sym(&mut self, prov: Provenance) -> Term {
        let v = self.fresh.fresh();
        self.prov.insert(v, prov);
        Term::sym(v)
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

    /// Drop a branch whose path condition is unsatisfiable, recording the
    /// site. Returns true when the branch should be discarded.
    pub fn prune(&mut self, st: &SymState) -> bool {
        if self.no_prune {
            return false;
        }
        if st.pc_sat() == crate::symbolic::Sat::Unsat {
            self.pruned.push(self.cur_site);
            true
        } else {
            false
        }
    }
}

/// Least fixpoint of "mentions `?` directly or through a predicate body".
pub fn imprecise_predicates(p: &Program) -> BTreeSet<String> {
    let mut imprecise: BTreeSet<String> =
        p.predicates.iter().filter(|pd| pd.body.imprecise).map(|pd| pd.name.clone()).collect();
    loop {
        let mut changed = false;
        for pd in &p.predicates {
            if imprecise.contains(&pd.name) {
                continue;
            }
            let mut mentioned = BTreeSet::new();
            pd.body.body.predicates(&mut mentioned);
            if !mentioned.is_disjoint(&imprecise) {
                imprecise.insert(pd.name.clone());
                changed = true;
            }
        }
        if !changed {
            return imprecise;
        }
    }
}
