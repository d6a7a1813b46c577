//! Abstract syntax for the object language: structs, predicates, methods,
//! statements, expressions, and (possibly imprecise) formulas.

use crate::span::Span;
use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    Char,
    Struct(String),
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::Bool => write!(f, "bool"),
            Type::Char => write!(f, "char"),
            Type::Struct(s) => write!(f, "{}", s),
        }
    }
}

/// Binary operators that are not short-circuiting. `&&` and `||` are separate
/// expression forms because both evaluation and framing treat them specially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        };
        write!(f, "{}", s)
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    IntLit(i64),
    BoolLit(bool),
    CharLit(char),
    Null,
    Var(String),
    Field(Box<Expr>, String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn new(span: Span, kind: ExprKind) -> Self {
        Expr { span, kind }
    }

    pub fn var(span: Span, name: &str) -> Self {
        Expr::new(span, ExprKind::Var(name.to_string()))
    }

    /// Structural equality ignoring spans.
    pub fn equiv(&self, other: &Expr) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (IntLit(a), IntLit(b)) => a == b,
            (BoolLit(a), BoolLit(b)) => a == b,
            (CharLit(a), CharLit(b)) => a == b,
            (Null, Null) => true,
            (Var(a), Var(b)) => a == b,
            (Field(a, fa), Field(b, fb)) => fa == fb && a.equiv(b),
            (Not(a), Not(b)) => a.equiv(b),
            (And(a1, a2), And(b1, b2)) | (Or(a1, a2), Or(b1, b2)) => {
                a1.equiv(b1) && a2.equiv(b2)
            }
            (Binary(opa, a1, a2), Binary(opb, b1, b2)) => {
                opa == opb && a1.equiv(b1) && a2.equiv(b2)
            }
            _ => false,
        }
    }

    /// Replace every free variable by its image under `map` (variables absent
    /// from `map` are kept). Used to translate formula-level checks into the
    /// caller's source vocabulary.
    pub fn subst(&self, map: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        let kind = match &self.kind {
            ExprKind::Var(x) => {
                if let Some(e) = map(x) {
                    return e;
                }
                ExprKind::Var(x.clone())
            }
            ExprKind::Field(e, f) => ExprKind::Field(Box::new(e.subst(map)), f.clone()),
            ExprKind::Not(e) => ExprKind::Not(Box::new(e.subst(map))),
            ExprKind::And(a, b) => ExprKind::And(Box::new(a.subst(map)), Box::new(b.subst(map))),
            ExprKind::Or(a, b) => ExprKind::Or(Box::new(a.subst(map)), Box::new(b.subst(map))),
            ExprKind::Binary(op, a, b) => {
                ExprKind::Binary(*op, Box::new(a.subst(map)), Box::new(b.subst(map)))
            }
            k => k.clone(),
        };
        Expr::new(self.span, kind)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, f, 0)
    }
}

// Precedence levels for printing: higher binds tighter.
fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Or(..) => 1,
        ExprKind::And(..) => 2,
        ExprKind::Binary(op, ..) if matches!(op, BinOp::Eq | BinOp::Ne) => 3,
        ExprKind::Binary(op, ..) if op.is_comparison() => 4,
        ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => 5,
        ExprKind::Binary(..) => 6,
        ExprKind::Not(..) => 7,
        _ => 8,
    }
}

fn fmt_expr(e: &Expr, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
    let prec = expr_prec(e);
    let parens = prec < min_prec;
    if parens {
        write!(f, "(")?;
    }
    match &e.kind {
        ExprKind::IntLit(n) => write!(f, "{}", n)?,
        ExprKind::BoolLit(b) => write!(f, "{}", b)?,
        ExprKind::CharLit(c) => write!(f, "'{}'", c.escape_default())?,
        ExprKind::Null => write!(f, "NULL")?,
        ExprKind::Var(x) => write!(f, "{}", x)?,
        ExprKind::Field(recv, field) => {
            fmt_expr(recv, f, 8)?;
            write!(f, ".{}", field)?;
        }
        ExprKind::Not(inner) => {
            write!(f, "!")?;
            fmt_expr(inner, f, 7)?;
        }
        ExprKind::And(a, b) => {
            fmt_expr(a, f, 3)?;
            write!(f, " && ")?;
            fmt_expr(b, f, 2)?;
        }
        ExprKind::Or(a, b) => {
            fmt_expr(a, f, 2)?;
            write!(f, " || ")?;
            fmt_expr(b, f, 1)?;
        }
        ExprKind::Binary(op, a, b) => {
            fmt_expr(a, f, prec)?;
            write!(f, " {} ", op)?;
            fmt_expr(b, f, prec + 1)?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Formula {
    pub span: Span,
    pub kind: FormulaKind,
}

#[derive(Debug, Clone)]
pub enum FormulaKind {
    Expr(Expr),
    /// `acc(recv.field)`
    Acc(Expr, String),
    Pred(String, Vec<Expr>),
    Cond(Expr, Box<Formula>, Box<Formula>),
    Conj(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn equiv(&self, other: &Formula) -> bool {
        use FormulaKind::*;
        match (&self.kind, &other.kind) {
            (Expr(a), Expr(b)) => a.equiv(b),
            (Acc(a, fa), Acc(b, fb)) => fa == fb && a.equiv(b),
            (Pred(pa, aa), Pred(pb, ab)) => {
                pa == pb && aa.len() == ab.len() && aa.iter().zip(ab).all(|(x, y)| x.equiv(y))
            }
            (Cond(ea, a1, a2), Cond(eb, b1, b2)) => {
                ea.equiv(eb) && a1.equiv(b1) && a2.equiv(b2)
            }
            (Conj(a1, a2), Conj(b1, b2)) => a1.equiv(b1) && a2.equiv(b2),
            _ => false,
        }
    }

    pub fn subst(&self, map: &dyn Fn(&str) -> Option<Expr>) -> Formula {
        let kind = match &self.kind {
            FormulaKind::Expr(e) => FormulaKind::Expr(e.subst(map)),
            FormulaKind::Acc(e, f) => FormulaKind::Acc(e.subst(map), f.clone()),
            FormulaKind::Pred(p, args) => {
                FormulaKind::Pred(p.clone(), args.iter().map(|a| a.subst(map)).collect())
            }
            FormulaKind::Cond(e, a, b) => FormulaKind::Cond(
                e.subst(map),
                Box::new(a.subst(map)),
                Box::new(b.subst(map)),
            ),
            FormulaKind::Conj(a, b) => {
                FormulaKind::Conj(Box::new(a.subst(map)), Box::new(b.subst(map)))
            }
        };
        Formula { span: self.span, kind }
    }

    /// Predicate names mentioned anywhere in the formula.
    pub fn predicates(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            FormulaKind::Expr(_) | FormulaKind::Acc(..) => {}
            FormulaKind::Pred(p, _) => {
                out.insert(p.clone());
            }
            FormulaKind::Cond(_, a, b) | FormulaKind::Conj(a, b) => {
                a.predicates(out);
                b.predicates(out);
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(self, f)
    }
}

fn fmt_formula(fml: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match &fml.kind {
        FormulaKind::Expr(e) => {
            // Parenthesize conjunction-level operators so `*` stays unambiguous.
            if matches!(e.kind, ExprKind::Binary(BinOp::Mul | BinOp::Div, ..)) {
                write!(f, "({})", e)
            } else {
                write!(f, "{}", e)
            }
        }
        FormulaKind::Acc(recv, field) => write!(f, "acc({}.{})", recv, field),
        FormulaKind::Pred(p, args) => {
            write!(f, "{}(", p)?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", a)?;
            }
            write!(f, ")")
        }
        FormulaKind::Cond(e, a, b) => {
            write!(f, "({} ? ", e)?;
            fmt_formula(a, f)?;
            write!(f, " : ")?;
            fmt_formula(b, f)?;
            write!(f, ")")
        }
        FormulaKind::Conj(a, b) => {
            fmt_formula(a, f)?;
            write!(f, " * ")?;
            fmt_formula(b, f)
        }
    }
}

/// A gradual formula: optionally imprecise (`? * φ`).
#[derive(Debug, Clone)]
pub struct GFormula {
    pub span: Span,
    pub imprecise: bool,
    pub body: Formula,
}

impl GFormula {
    pub fn precise(body: Formula) -> Self {
        GFormula { span: body.span, imprecise: false, body }
    }

    pub fn equiv(&self, other: &GFormula) -> bool {
        self.imprecise == other.imprecise && self.body.equiv(&other.body)
    }
}

impl fmt::Display for GFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.imprecise {
            write!(f, "? * ")?;
        }
        fmt_formula(&self.body, f)
    }
}

/// Statements are reference-counted trees so that small-step execution can
/// share the tail of a sequence cheaply. Every non-synthetic node carries a
/// unique id assigned at parse time; ids identify check sites.
#[derive(Debug, Clone)]
pub struct Stmt(pub Rc<StmtNode>);

#[derive(Debug)]
pub struct StmtNode {
    /// Unique per parsed node; `SYNTHETIC` for sequence nodes created during
    /// stepping (they are never check sites).
    pub id: u32,
    pub span: Span,
    pub kind: StmtKind,
}

pub const SYNTHETIC: u32 = u32::MAX;

#[derive(Debug)]
pub enum StmtKind {
    Skip,
    Seq(Stmt, Stmt),
    Assign(String, Expr),
    AssignField(String, String, Expr),
    Alloc(String, String),
    Call(String, String, Vec<Expr>),
    Assert(Formula),
    Fold(String, Vec<Expr>),
    Unfold(String, Vec<Expr>),
    If(Expr, Stmt, Stmt),
    While(Expr, GFormula, Stmt),
}

impl Stmt {
    pub fn new(id: u32, span: Span, kind: StmtKind) -> Self {
        Stmt(Rc::new(StmtNode { id, span, kind }))
    }

    pub fn skip() -> Self {
        Stmt::new(SYNTHETIC, Span::default(), StmtKind::Skip)
    }

    pub fn seq(a: Stmt, b: Stmt) -> Self {
        Stmt::new(SYNTHETIC, Span::default(), StmtKind::Seq(a, b))
    }

    pub fn kind(&self) -> &StmtKind {
        &self.0.kind
    }

    pub fn id(&self) -> u32 {
        self.0.id
    }

    pub fn span(&self) -> Span {
        self.0.span
    }

    pub fn is_skip(&self) -> bool {
        matches!(self.kind(), StmtKind::Skip)
    }

    /// The first non-sequence statement, i.e. what executes next.
    pub fn head(&self) -> &Stmt {
        match self.kind() {
            StmtKind::Seq(a, _) => a.head(),
            _ => self,
        }
    }

    /// Right-nest sequences so the head is directly accessible:
    /// `seq(seq(a,b),c)` becomes `seq(a, seq(b,c))`.
    pub fn normalize(&self) -> Stmt {
        match self.kind() {
            StmtKind::Seq(a, b) => match a.kind() {
                StmtKind::Seq(..) => {
                    let a = a.normalize();
                    // a is now seq(h, t) or a non-seq
                    match a.kind() {
                        StmtKind::Seq(h, t) => {
                            Stmt::seq(h.clone(), Stmt::seq(t.clone(), b.clone())).normalize()
                        }
                        _ => Stmt::seq(a.clone(), b.normalize()),
                    }
                }
                StmtKind::Skip if a.id() == SYNTHETIC => b.normalize(),
                _ => Stmt::seq(a.clone(), b.normalize()),
            },
            _ => self.clone(),
        }
    }

    /// Split `self` (assumed normalized, non-skip) into head and tail;
    /// a bare non-seq statement has tail `skip`.
    pub fn uncons(&self) -> (Stmt, Stmt) {
        match self.kind() {
            StmtKind::Seq(a, b) => (a.clone(), b.clone()),
            _ => (self.clone(), Stmt::skip()),
        }
    }

    /// Variables assigned anywhere within, including nested statements.
    /// Field writes do not count.
    pub fn modified(&self, out: &mut BTreeSet<String>) {
        match self.kind() {
            StmtKind::Skip | StmtKind::AssignField(..) | StmtKind::Assert(_)
            | StmtKind::Fold(..) | StmtKind::Unfold(..) => {}
            StmtKind::Seq(a, b) => {
                a.modified(out);
                b.modified(out);
            }
            StmtKind::Assign(x, _) | StmtKind::Alloc(x, _) | StmtKind::Call(x, _, _) => {
                out.insert(x.clone());
            }
            StmtKind::If(_, a, b) => {
                a.modified(out);
                b.modified(out);
            }
            StmtKind::While(_, _, body) => body.modified(out),
        }
    }

    pub fn equiv(&self, other: &Stmt) -> bool {
        use StmtKind::*;
        match (self.kind(), other.kind()) {
            (Skip, Skip) => true,
            (Seq(a1, b1), Seq(a2, b2)) => a1.equiv(a2) && b1.equiv(b2),
            (Assign(x1, e1), Assign(x2, e2)) => x1 == x2 && e1.equiv(e2),
            (AssignField(x1, f1, e1), AssignField(x2, f2, e2)) => {
                x1 == x2 && f1 == f2 && e1.equiv(e2)
            }
            (Alloc(x1, s1), Alloc(x2, s2)) => x1 == x2 && s1 == s2,
            (Call(y1, m1, a1), Call(y2, m2, a2)) => {
                y1 == y2
                    && m1 == m2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| x.equiv(y))
            }
            (Assert(f1), Assert(f2)) => f1.equiv(f2),
            (Fold(p1, a1), Fold(p2, a2)) | (Unfold(p1, a1), Unfold(p2, a2)) => {
                p1 == p2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| x.equiv(y))
            }
            (If(e1, t1, f1), If(e2, t2, f2)) => e1.equiv(e2) && t1.equiv(t2) && f1.equiv(f2),
            (While(e1, i1, b1), While(e2, i2, b2)) => {
                e1.equiv(e2) && i1.equiv(i2) && b1.equiv(b2)
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StructDef {
    pub span: Span,
    pub name: String,
    pub fields: Vec<(Type, String)>,
}

#[derive(Debug, Clone)]
pub struct PredicateDef {
    pub span: Span,
    pub name: String,
    pub params: Vec<(Type, String)>,
    pub body: GFormula,
}

#[derive(Debug, Clone)]
pub struct MethodDef {
    pub span: Span,
    pub name: String,
    pub params: Vec<(Type, String)>,
    pub ret: Type,
    pub pre: GFormula,
    pub post: GFormula,
    pub body: Stmt,
    /// Declared local variable types (from `T x;` / `T x = e;` desugaring).
    pub locals: Vec<(String, Type)>,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub structs: Vec<StructDef>,
    pub predicates: Vec<PredicateDef>,
    pub methods: Vec<MethodDef>,
}

impl Program {
    pub fn struct_def(&self, name: &str) -> Option<&StructDef> {
        self.structs.iter().find(|s| s.name == name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDef> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&MethodDef> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn field_type(&self, struct_name: &str, field: &str) -> Option<&Type> {
        self.struct_def(struct_name)?
            .fields
            .iter()
            .find(|(_, f)| f == field)
            .map(|(t, _)| t)
    }

    pub fn entry(&self) -> Option<&MethodDef> {
        self.method("main")
    }
}

// ---------------------------------------------------------------------------
// Pretty printing (round-trips through the parser).
// ---------------------------------------------------------------------------

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for s in &p.structs {
        out.push_str(&format!("struct {} {{\n", s.name));
        for (t, f) in &s.fields {
            out.push_str(&format!("  {} {};\n", t, f));
        }
        out.push_str("}\n\n");
    }
    for pd in &p.predicates {
        let params = pd
            .params
            .iter()
            .map(|(t, x)| format!("{} {}", t, x))
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!("predicate {}({}) = {};\n\n", pd.name, params, pd.body));
    }
    for m in &p.methods {
        let params = m
            .params
            .iter()
            .map(|(t, x)| format!("{} {}", t, x))
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!("{} {}({})\n", m.ret, m.name, params));
        out.push_str(&format!("  requires {}\n", m.pre));
        out.push_str(&format!("  ensures {}\n", m.post));
        out.push_str("{\n");
        pretty_stmt(&m.body, 1, &mut out);
        out.push_str("}\n\n");
    }
    out
}

fn pretty_stmt(s: &Stmt, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match s.kind() {
        StmtKind::Skip => {}
        StmtKind::Seq(a, b) => {
            pretty_stmt(a, indent, out);
            pretty_stmt(b, indent, out);
        }
        StmtKind::Assign(x, e) => out.push_str(&format!("{}{} = {};\n", pad, x, e)),
        StmtKind::AssignField(x, f, e) => out.push_str(&format!("{}{}.{} = {};\n", pad, x, f, e)),
        StmtKind::Alloc(x, st) => out.push_str(&format!("{}{} = alloc({});\n", pad, x, st)),
        StmtKind::Call(y, m, args) => {
            let args = args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ");
            out.push_str(&format!("{}{} = {}({});\n", pad, y, m, args));
        }
        StmtKind::Assert(f) => {
            let g = GFormula::precise(f.clone());
            out.push_str(&format!("{}assert {};\n", pad, g));
        }
        StmtKind::Fold(p, args) => {
            let args = args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ");
            out.push_str(&format!("{}fold {}({});\n", pad, p, args));
        }
        StmtKind::Unfold(p, args) => {
            let args = args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ");
            out.push_str(&format!("{}unfold {}({});\n", pad, p, args));
        }
        StmtKind::If(e, t, f) => {
            out.push_str(&format!("{}if ({}) {{\n", pad, e));
            pretty_stmt(t, indent + 1, out);
            if f.is_skip() {
                out.push_str(&format!("{}}}\n", pad));
            } else {
                out.push_str(&format!("{}}} else {{\n", pad));
                pretty_stmt(f, indent + 1, out);
                out.push_str(&format!("{}}}\n", pad));
            }
        }
        StmtKind::While(e, inv, body) => {
            out.push_str(&format!("{}while ({})\n{}  invariant {}\n{}{{\n", pad, e, pad, inv, pad));
            pretty_stmt(body, indent + 1, out);
            out.push_str(&format!("{}}}\n", pad));
        }
    }
}
