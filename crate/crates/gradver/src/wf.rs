//! Well-formedness: name resolution, typing, definite assignment, contract
//! scoping, and the syntactic self-framing check.
//!
//! All checks report diagnostics rather than failing fast, so a caller can
//! show every problem in one pass. Local variables may be declared (`T x;`)
//! or introduced by their first dominating assignment, in which case the type
//! is inferred from the right-hand side.

use crate::ast::*;
use crate::span::Span;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub span: Span,
    pub msg: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.msg)
    }
}

/// Result of the syntactic self-framing check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Framing {
    Framed,
    /// Carries the offending dereference, printed as `recv.field`.
    NotFramed(String),
}

/// Internal type lattice: `Null` is the type of the `NULL` literal and is
/// compatible with every struct reference type.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
    Char,
    Struct(String),
    Null,
}

impl Ty {
    fn of(t: &Type) -> Ty {
        match t {
            Type::Int => Ty::Int,
            Type::Bool => Ty::Bool,
            Type::Char => Ty::Char,
            Type::Struct(s) => Ty::Struct(s.clone()),
        }
    }

    fn compatible(&self, other: &Ty) -> bool {
        match (self, other) {
            (Ty::Null, Ty::Null | Ty::Struct(_)) => true,
            (Ty::Struct(_), Ty::Null) => true,
            _ => self == other,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => write!(f, "int"),
            Ty::Bool => write!(f, "bool"),
            Ty::Char => write!(f, "char"),
            Ty::Struct(s) => write!(f, "{}", s),
            Ty::Null => write!(f, "NULL"),
        }
    }
}

pub fn check_well_formed(prog: &Program) -> Vec<Diagnostic> {
    let mut ck = Checker { prog, diags: Vec::new() };
    ck.check_names();
    for pd in &prog.predicates {
        ck.check_predicate(pd);
    }
    for m in &prog.methods {
        ck.check_method(m);
    }
    ck.diags
}

struct Checker<'a> {
    prog: &'a Program,
    diags: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn diag(&mut self, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic { span, msg: msg.into() });
    }

    fn check_names(&mut self) {
        let mut seen = BTreeSet::new();
        for s in &self.prog.structs {
            if !seen.insert(&s.name) {
                self.diags.push(Diagnostic {
                    span: s.span,
                    msg: format!("duplicate struct `{}`", s.name),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for p in &self.prog.predicates {
            if !seen.insert(&p.name) {
                self.diags.push(Diagnostic {
                    span: p.span,
                    msg: format!("duplicate predicate `{}`", p.name),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for m in &self.prog.methods {
            if !seen.insert(&m.name) {
                self.diags.push(Diagnostic {
                    span: m.span,
                    msg: format!("duplicate method `{}`", m.name),
                });
            }
        }
        for s in &self.prog.structs {
            let mut fields = BTreeSet::new();
            for (ty, f) in &s.fields {
                if !fields.insert(f) {
                    self.diags.push(Diagnostic {
                        span: s.span,
                        msg: format!("duplicate field `{}` in struct `{}`", f, s.name),
                    });
                }
                self.check_type(ty, s.span);
            }
        }
    }

    fn check_type(&mut self, ty: &Type, span: Span) {
        if let Type::Struct(s) = ty {
            if self.prog.struct_def(s).is_none() {
                self.diag(span, format!("unknown struct `{}`", s));
            }
        }
    }

    fn check_params(&mut self, params: &[(Type, String)], span: Span) -> BTreeMap<String, Ty> {
        let mut env = BTreeMap::new();
        for (ty, x) in params {
            self.check_type(ty, span);
            if env.insert(x.clone(), Ty::of(ty)).is_some() {
                self.diag(span, format!("duplicate parameter `{}`", x));
            }
        }
        env
    }

    fn check_predicate(&mut self, pd: &PredicateDef) {
        let env = self.check_params(&pd.params, pd.span);
        self.check_formula(&pd.body, &env);
        let mut vars = BTreeSet::new();
        free_vars_formula(&pd.body.body, &mut vars);
        for x in vars {
            if !env.contains_key(&x) {
                self.diag(
                    pd.body.span,
                    format!("predicate `{}` body mentions `{}`, which is not a parameter", pd.name, x),
                );
            }
        }
        match check_self_framing_in(self.prog, &pd.body) {
            Framing::Framed => {}
            Framing::NotFramed(w) => {
                self.diag(
                    pd.body.span,
                    format!("predicate `{}` body is not self-framed: `{}` lacks a preceding accessibility conjunct", pd.name, w),
                );
            }
        }
    }

    fn check_method(&mut self, m: &MethodDef) {
        self.check_type(&m.ret, m.span);
        let params: BTreeSet<String> = m.params.iter().map(|(_, x)| x.clone()).collect();
        let mut env = self.check_params(&m.params, m.span);

        // Contract scoping and typing.
        self.check_formula(&m.pre, &env);
        self.check_contract_scope(&m.pre.body, &params, false, "pre-condition");
        env.insert("result".into(), Ty::of(&m.ret));
        self.check_formula(&m.post, &env);
        self.check_contract_scope(&m.post.body, &params, true, "post-condition");
        if m.pre.imprecise && !m.post.imprecise {
            self.diag(
                m.post.span,
                format!("method `{}` has an imprecise pre-condition, so its post-condition must also be imprecise", m.name),
            );
        }
        for (g, what) in [(&m.pre, "pre-condition"), (&m.post, "post-condition")] {
            if let Framing::NotFramed(w) = check_self_framing_in(self.prog, g) {
                self.diag(
                    g.span,
                    format!("{} of `{}` is not self-framed: `{}` lacks a preceding accessibility conjunct", what, m.name, w),
                );
            }
        }

        // Body: typing + inference + definite assignment in one ordered pass.
        for (x, ty) in &m.locals {
            self.check_type(ty, m.span);
            if params.contains(x) {
                self.diag(m.span, format!("local `{}` shadows a parameter", x));
            }
            env.entry(x.clone()).or_insert_with(|| Ty::of(ty));
        }
        let mut assigned: BTreeSet<String> = params.clone();
        let out = self.check_stmt(&m.body, &mut env, &params, assigned.clone());
        assigned = out;
        if !assigned.contains("result") {
            self.diag(
                m.span,
                format!("method `{}` does not assign `result` on every path", m.name),
            );
        }
    }

    fn check_contract_scope(
        &mut self,
        f: &Formula,
        params: &BTreeSet<String>,
        allow_result: bool,
        what: &str,
    ) {
        let mut vars = BTreeSet::new();
        free_vars_formula(f, &mut vars);
        for x in vars {
            let ok = params.contains(&x) || (allow_result && x == "result");
            if !ok {
                self.diag(
                    f.span,
                    format!("{} mentions `{}`, which is not a parameter{}",
                        what, x, if allow_result { " or `result`" } else { "" }),
                );
            }
        }
    }

    // -- statements ---------------------------------------------------------

    /// Types `s` under `env` (extending it by inference for undeclared
    /// locals) and returns the set of definitely-assigned variables after it.
    fn check_stmt(
        &mut self,
        s: &Stmt,
        env: &mut BTreeMap<String, Ty>,
        params: &BTreeSet<String>,
        mut assigned: BTreeSet<String>,
    ) -> BTreeSet<String> {
        match s.kind() {
            StmtKind::Skip => assigned,
            StmtKind::Seq(a, b) => {
                let mid = self.check_stmt(a, env, params, assigned);
                self.check_stmt(b, env, params, mid)
            }
            StmtKind::Assign(x, e) => {
                let t = self.check_expr(e, env, &assigned);
                self.bind(x, t, s.span(), env, params);
                assigned.insert(x.clone());
                assigned
            }
            StmtKind::Alloc(x, st) => {
                if self.prog.struct_def(st).is_none() {
                    self.diag(s.span(), format!("unknown struct `{}`", st));
                }
                self.bind(x, Some(Ty::Struct(st.clone())), s.span(), env, params);
                assigned.insert(x.clone());
                assigned
            }
            StmtKind::Call(y, mname, args) => {
                let sig = self.prog.method(mname).map(|m| {
                    (m.params.iter().map(|(t, _)| Ty::of(t)).collect::<Vec<_>>(), Ty::of(&m.ret))
                });
                match sig {
                    None => {
                        self.diag(s.span(), format!("unknown method `{}`", mname));
                        for a in args {
                            self.check_expr(a, env, &assigned);
                        }
                        self.bind(y, None, s.span(), env, params);
                    }
                    Some((ptys, rty)) => {
                        if args.len() != ptys.len() {
                            self.diag(
                                s.span(),
                                format!("`{}` expects {} arguments, got {}", mname, ptys.len(), args.len()),
                            );
                        }
                        for (a, pt) in args.iter().zip(&ptys) {
                            if let Some(at) = self.check_expr(a, env, &assigned) {
                                if !at.compatible(pt) {
                                    self.diag(a.span, format!("argument has type {}, expected {}", at, pt));
                                }
                            }
                        }
                        for a in args.iter().skip(ptys.len()) {
                            self.check_expr(a, env, &assigned);
                        }
                        self.bind(y, Some(rty), s.span(), env, params);
                    }
                }
                assigned.insert(y.clone());
                assigned
            }
            StmtKind::AssignField(x, f, e) => {
                if !assigned.contains(x) {
                    self.diag(s.span(), format!("`{}` may be used before assignment", x));
                }
                let et = self.check_expr(e, env, &assigned);
                match env.get(x).cloned() {
                    Some(Ty::Struct(st)) => match self.prog.field_type(&st, f) {
                        Some(ft) => {
                            if let Some(et) = et {
                                if !et.compatible(&Ty::of(ft)) {
                                    self.diag(
                                        s.span(),
                                        format!("cannot assign {} to field `{}` of type {}", et, f, ft),
                                    );
                                }
                            }
                        }
                        None => self.diag(s.span(), format!("struct `{}` has no field `{}`", st, f)),
                    },
                    Some(t) => self.diag(s.span(), format!("`{}` has type {}, not a struct", x, t)),
                    None => self.diag(s.span(), format!("unknown variable `{}`", x)),
                }
                assigned
            }
            StmtKind::Assert(f) => {
                self.check_formula_precise(f, env, &assigned);
                assigned
            }
            StmtKind::Fold(p, args) | StmtKind::Unfold(p, args) => {
                self.check_pred_use(p, args, s.span(), env, Some(&assigned));
                assigned
            }
            StmtKind::If(e, t, f) => {
                self.expect_ty(e, Ty::Bool, env, &assigned);
                let at = self.check_stmt(t, env, params, assigned.clone());
                let af = self.check_stmt(f, env, params, assigned);
                at.intersection(&af).cloned().collect()
            }
            StmtKind::While(e, inv, body) => {
                self.expect_ty(e, Ty::Bool, env, &assigned);
                self.check_formula(inv, env);
                let mut inv_vars = BTreeSet::new();
                free_vars_formula(&inv.body, &mut inv_vars);
                for x in &inv_vars {
                    if !assigned.contains(x) {
                        self.diag(inv.span, format!("invariant mentions `{}` before it is assigned", x));
                    }
                }
                if let Framing::NotFramed(w) = check_self_framing_in(self.prog, inv) {
                    self.diag(
                        inv.span,
                        format!("loop invariant is not self-framed: `{}` lacks a preceding accessibility conjunct", w),
                    );
                }
                // The body may never run; its assignments are not definite.
                self.check_stmt(body, env, params, assigned.clone());
                assigned
            }
        }
    }

    fn bind(
        &mut self,
        x: &str,
        t: Option<Ty>,
        span: Span,
        env: &mut BTreeMap<String, Ty>,
        params: &BTreeSet<String>,
    ) {
        if params.contains(x) {
            self.diag(span, format!("cannot assign to parameter `{}`", x));
            return;
        }
        match (env.get(x), t) {
            (Some(old), Some(new)) => {
                if !new.compatible(old) {
                    self.diag(span, format!("`{}` has type {}, cannot assign {}", x, old, new));
                }
            }
            (None, Some(new)) => {
                // NULL alone gives no struct type to infer.
                if new == Ty::Null {
                    self.diag(span, format!("cannot infer the type of `{}` from NULL; declare it", x));
                } else {
                    env.insert(x.to_string(), new);
                }
            }
            (None, None) => {
                self.diag(span, format!("cannot determine the type of `{}`", x));
            }
            (Some(_), None) => {}
        }
    }

    // -- formulas -----------------------------------------------------------

    /// Types a contract formula under `env` alone (no definite-assignment
    /// information: contracts only mention parameters/`result`).
    fn check_formula(&mut self, g: &GFormula, env: &BTreeMap<String, Ty>) {
        let mut env = env.clone();
        self.formula_ty(&g.body, &mut env, None);
    }

    fn check_formula_precise(
        &mut self,
        f: &Formula,
        env: &mut BTreeMap<String, Ty>,
        assigned: &BTreeSet<String>,
    ) {
        let assigned = assigned.clone();
        self.formula_ty(f, env, Some(&assigned));
    }

    fn formula_ty(
        &mut self,
        f: &Formula,
        env: &mut BTreeMap<String, Ty>,
        assigned: Option<&BTreeSet<String>>,
    ) {
        match &f.kind {
            FormulaKind::Expr(e) => {
                if let Some(t) = self.expr_ty(e, env, assigned) {
                    if t != Ty::Bool {
                        self.diag(e.span, format!("formula conjunct has type {}, expected bool", t));
                    }
                }
            }
            FormulaKind::Acc(recv, field) => {
                match self.expr_ty(recv, env, assigned) {
                    Some(Ty::Struct(st)) => {
                        if self.prog.field_type(&st, field).is_none() {
                            self.diag(recv.span, format!("struct `{}` has no field `{}`", st, field));
                        }
                    }
                    Some(t) => self.diag(recv.span, format!("accessibility receiver has type {}, expected a struct", t)),
                    None => {}
                }
            }
            FormulaKind::Pred(p, args) => {
                let env2 = env.clone();
                let _ = env2;
                self.check_pred_use(p, args, f.span, env, assigned);
            }
            FormulaKind::Cond(e, a, b) => {
                self.expect_ty_in(e, Ty::Bool, env, assigned);
                self.formula_ty(a, env, assigned);
                self.formula_ty(b, env, assigned);
            }
            FormulaKind::Conj(a, b) => {
                self.formula_ty(a, env, assigned);
                self.formula_ty(b, env, assigned);
            }
        }
    }

    fn check_pred_use(
        &mut self,
        p: &str,
        args: &[Expr],
        span: Span,
        env: &mut BTreeMap<String, Ty>,
        assigned: Option<&BTreeSet<String>>,
    ) {
        match self.prog.predicate(p) {
            None => {
                self.diag(span, format!("unknown predicate `{}`", p));
                for a in args {
                    self.expr_ty(a, env, assigned);
                }
            }
            Some(pd) => {
                let ptys: Vec<Ty> = pd.params.iter().map(|(t, _)| Ty::of(t)).collect();
                if args.len() != ptys.len() {
                    self.diag(
                        span,
                        format!("predicate `{}` expects {} arguments, got {}", p, ptys.len(), args.len()),
                    );
                }
                for (a, pt) in args.iter().zip(&ptys) {
                    if let Some(at) = self.expr_ty(a, env, assigned) {
                        if !at.compatible(pt) {
                            self.diag(a.span, format!("argument has type {}, expected {}", at, pt));
                        }
                    }
                }
                for a in args.iter().skip(ptys.len()) {
                    self.expr_ty(a, env, assigned);
                }
            }
        }
    }

    // -- expressions --------------------------------------------------------

    fn check_expr(
        &mut self,
        e: &Expr,
        env: &mut BTreeMap<String, Ty>,
        assigned: &BTreeSet<String>,
    ) -> Option<Ty> {
        self.expr_ty(e, env, Some(assigned))
    }

    fn expect_ty(
        &mut self,
        e: &Expr,
        want: Ty,
        env: &mut BTreeMap<String, Ty>,
        assigned: &BTreeSet<String>,
    ) {
        self.expect_ty_in(e, want, env, Some(assigned));
    }

    fn expect_ty_in(
        &mut self,
        e: &Expr,
        want: Ty,
        env: &mut BTreeMap<String, Ty>,
        assigned: Option<&BTreeSet<String>>,
    ) {
        if let Some(t) = self.expr_ty(e, env, assigned) {
            if !t.compatible(&want) {
                self.diag(e.span, format!("expression has type {}, expected {}", t, want));
            }
        }
    }

    fn expr_ty(
        &mut self,
        e: &Expr,
        env: &mut BTreeMap<String, Ty>,
        assigned: Option<&BTreeSet<String>>,
    ) -> Option<Ty> {
        match &e.kind {
            ExprKind::IntLit(_) => Some(Ty::Int),
            ExprKind::BoolLit(_) => Some(Ty::Bool),
            ExprKind::CharLit(_) => Some(Ty::Char),
            ExprKind::Null => Some(Ty::Null),
            ExprKind::Var(x) => {
                if let Some(assigned) = assigned {
                    if !assigned.contains(x) && env.contains_key(x) {
                        self.diag(e.span, format!("`{}` may be used before assignment", x));
                    }
                }
                match env.get(x) {
                    Some(t) => Some(t.clone()),
                    None => {
                        // In contract/predicate position (no definite-assignment
                        // info) the scope checks already report out-of-scope
                        // variables; avoid a duplicate diagnostic.
                        if assigned.is_some() {
                            self.diag(e.span, format!("unknown variable `{}`", x));
                        }
                        None
                    }
                }
            }
            ExprKind::Field(recv, field) => {
                match self.expr_ty(recv, env, assigned)? {
                    Ty::Struct(st) => match self.prog.field_type(&st, field) {
                        Some(t) => Some(Ty::of(t)),
                        None => {
                            self.diag(e.span, format!("struct `{}` has no field `{}`", st, field));
                            None
                        }
                    },
                    t => {
                        self.diag(e.span, format!("cannot access field `{}` on {}", field, t));
                        None
                    }
                }
            }
            ExprKind::Not(inner) => {
                self.expect_ty_in(inner, Ty::Bool, env, assigned);
                Some(Ty::Bool)
            }
            ExprKind::And(a, b) | ExprKind::Or(a, b) => {
                self.expect_ty_in(a, Ty::Bool, env, assigned);
                self.expect_ty_in(b, Ty::Bool, env, assigned);
                Some(Ty::Bool)
            }
            ExprKind::Binary(op, a, b) => {
                let ta = self.expr_ty(a, env, assigned);
                let tb = self.expr_ty(b, env, assigned);
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        for (t, side) in [(&ta, a), (&tb, b)] {
                            if let Some(t) = t {
                                if *t != Ty::Int {
                                    self.diag(side.span, format!("arithmetic operand has type {}, expected int", t));
                                }
                            }
                        }
                        Some(Ty::Int)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        for (t, side) in [(&ta, a), (&tb, b)] {
                            if let Some(t) = t {
                                if *t != Ty::Int {
                                    self.diag(side.span, format!("comparison operand has type {}, expected int", t));
                                }
                            }
                        }
                        Some(Ty::Bool)
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if let (Some(ta), Some(tb)) = (&ta, &tb) {
                            if !ta.compatible(tb) {
                                self.diag(e.span, format!("cannot compare {} with {}", ta, tb));
                            }
                        }
                        Some(Ty::Bool)
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Self-framing (syntactic sufficient condition)
// ---------------------------------------------------------------------------

/// Checks that every field dereference in `g` is preceded — to its left in
/// the conjunction, or earlier on the same conditional branch — by an
/// accessibility conjunct with a syntactically identical receiver.
/// Imprecise formulas are framed by definition. Predicate instances rely on
/// their bodies, which are checked at the declaration.
pub fn check_self_framing(g: &GFormula) -> Framing {
    if g.imprecise {
        return Framing::Framed;
    }
    let mut framed = BTreeSet::new();
    frame_formula(&g.body, &mut framed)
}

/// Variant used by `check_well_formed`; `prog` is currently unused but kept
/// so the call sites read uniformly and future refinements (e.g. unfolding
/// precise predicate bodies) stay local.
fn check_self_framing_in(_prog: &Program, g: &GFormula) -> Framing {
    check_self_framing(g)
}

fn frame_formula(f: &Formula, framed: &mut BTreeSet<(String, String)>) -> Framing {
    match &f.kind {
        FormulaKind::Expr(e) => frame_expr(e, framed),
        FormulaKind::Acc(recv, field) => {
            let r = frame_expr(recv, framed);
            if r != Framing::Framed {
                return r;
            }
            framed.insert((recv.to_string(), field.clone()));
            Framing::Framed
        }
        FormulaKind::Pred(_, args) => {
            for a in args {
                let r = frame_expr(a, framed);
                if r != Framing::Framed {
                    return r;
                }
            }
            Framing::Framed
        }
        FormulaKind::Cond(e, a, b) => {
            let r = frame_expr(e, framed);
            if r != Framing::Framed {
                return r;
            }
            let mut fa = framed.clone();
            let ra = frame_formula(a, &mut fa);
            if ra != Framing::Framed {
                return ra;
            }
            let mut fb = framed.clone();
            let rb = frame_formula(b, &mut fb);
            if rb != Framing::Framed {
                return rb;
            }
            // Only dereferences framed on both branches stay framed after.
            *framed = fa.intersection(&fb).cloned().collect();
            Framing::Framed
        }
        FormulaKind::Conj(a, b) => {
            let r = frame_formula(a, framed);
            if r != Framing::Framed {
                return r;
            }
            frame_formula(b, framed)
        }
    }
}

fn frame_expr(e: &Expr, framed: &BTreeSet<(String, String)>) -> Framing {
    match &e.kind {
        ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::CharLit(_)
        | ExprKind::Null | ExprKind::Var(_) => Framing::Framed,
        ExprKind::Field(recv, field) => {
            let r = frame_expr(recv, framed);
            if r != Framing::Framed {
                return r;
            }
            let key = (recv.to_string(), field.clone());
            if framed.contains(&key) {
                Framing::Framed
            } else {
                Framing::NotFramed(format!("{}.{}", recv, field))
            }
        }
        ExprKind::Not(inner) => frame_expr(inner, framed),
        ExprKind::And(a, b) | ExprKind::Or(a, b) => {
            let r = frame_expr(a, framed);
            if r != Framing::Framed {
                return r;
            }
            frame_expr(b, framed)
        }
        ExprKind::Binary(_, a, b) => {
            let r = frame_expr(a, framed);
            if r != Framing::Framed {
                return r;
            }
            frame_expr(b, framed)
        }
    }
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

pub fn free_vars_expr(e: &Expr, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::IntLit(_) | ExprKind::BoolLit(_) | ExprKind::CharLit(_) | ExprKind::Null => {}
        ExprKind::Var(x) => {
            out.insert(x.clone());
        }
        ExprKind::Field(recv, _) => free_vars_expr(recv, out),
        ExprKind::Not(inner) => free_vars_expr(inner, out),
        ExprKind::And(a, b) | ExprKind::Or(a, b) | ExprKind::Binary(_, a, b) => {
            free_vars_expr(a, out);
            free_vars_expr(b, out);
        }
    }
}

pub fn free_vars_formula(f: &Formula, out: &mut BTreeSet<String>) {
    match &f.kind {
        FormulaKind::Expr(e) => free_vars_expr(e, out),
        FormulaKind::Acc(recv, _) => free_vars_expr(recv, out),
        FormulaKind::Pred(_, args) => {
            for a in args {
                free_vars_expr(a, out);
            }
        }
        FormulaKind::Cond(e, a, b) => {
            free_vars_expr(e, out);
            free_vars_formula(a, out);
            free_vars_formula(b, out);
        }
        FormulaKind::Conj(a, b) => {
            free_vars_formula(a, out);
            free_vars_formula(b, out);
        }
    }
}
