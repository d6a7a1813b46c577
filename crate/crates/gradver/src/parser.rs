//! Recursive-descent parser for the `.gvl` concrete syntax.
//!
//! Notable syntax decisions (all chosen to match the usual C0-style spec
//! listings): `?` appears only as the leading conjunct of a contract, formula
//! conditionals are written `(e ? φ1 : φ2)`, and `*` inside a formula always
//! separates conjuncts — integer multiplication in a formula must be
//! parenthesized.

use crate::ast::*;
use crate::lexer::{lex, Tok, Token};
use crate::span::Span;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src).map_err(|e| ParseError { line: e.line, col: e.col, msg: e.msg })?;
    let mut p = Parser { toks, pos: 0, next_id: 0, ghost: 0, no_mul: false };
    p.program()
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: u32,
    ghost: u32,
    /// Inside a formula, a top-level `*` separates conjuncts; multiplication
    /// must be parenthesized. Cleared while inside expression parentheses.
    no_mul: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let sp = self.span();
        Err(ParseError { line: sp.line, col: sp.col, msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, ParseError> {
        if *self.peek() == tok {
            let sp = self.span();
            self.bump();
            Ok(sp)
        } else {
            self.err(format!("expected {}, found {}", tok, self.peek()))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let sp = self.span();
                self.bump();
                Ok((name, sp))
            }
            other => self.err(format!("expected identifier, found {}", other)),
        }
    }

    fn fresh_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn stmt_node(&mut self, span: Span, kind: StmtKind) -> Stmt {
        let id = self.fresh_id();
        Stmt::new(id, span, kind)
    }

    // -- top level ----------------------------------------------------------

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut prog = Program { structs: vec![], predicates: vec![], methods: vec![] };
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Struct => prog.structs.push(self.struct_def()?),
                Tok::Predicate => prog.predicates.push(self.predicate_def()?),
                _ => prog.methods.push(self.method_def()?),
            }
        }
        Ok(prog)
    }

    fn struct_def(&mut self) -> Result<StructDef, ParseError> {
        let span = self.expect(Tok::Struct)?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut fields = Vec::new();
        while *self.peek() != Tok::RBrace {
            let ty = self.ty()?;
            let (f, _) = self.ident()?;
            fields.push((ty, f));
            // the separator after the last field is optional
            if *self.peek() == Tok::Semi {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        Ok(StructDef { span, name, fields })
    }

    fn predicate_def(&mut self) -> Result<PredicateDef, ParseError> {
        let span = self.expect(Tok::Predicate)?;
        let (name, _) = self.ident()?;
        let params = self.params()?;
        self.expect(Tok::Assign)?;
        let body = self.gformula()?;
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        Ok(PredicateDef { span, name, params, body })
    }

    fn method_def(&mut self) -> Result<MethodDef, ParseError> {
        let span = self.span();
        let is_void = matches!(self.peek(), Tok::Ident(s) if s == "void");
        let ret = if is_void {
            self.bump();
            Type::Int
        } else {
            self.ty()?
        };
        let (name, _) = self.ident()?;
        let params = self.params()?;
        for (_, x) in &params {
            if x == "result" {
                return self.err("`result` is reserved and cannot be a parameter");
            }
        }
        // Contracts are optional; a missing clause defaults to `true`.
        let default_true = |sp: Span| GFormula {
            span: sp,
            imprecise: false,
            body: Formula { span: sp, kind: FormulaKind::Expr(Expr::new(sp, ExprKind::BoolLit(true))) },
        };
        let pre = if *self.peek() == Tok::Requires {
            self.bump();
            self.gformula()?
        } else {
            default_true(span)
        };
        let post = if *self.peek() == Tok::Ensures {
            self.bump();
            self.gformula()?
        } else {
            default_true(span)
        };
        let mut locals = Vec::new();
        let mut body = self.block(&mut locals)?;
        if is_void {
            // Desugar: value-returning with a dummy result assignment at the end.
            let sp = body.span();
            let zero = Expr::new(sp, ExprKind::IntLit(0));
            let ret_stmt = self.stmt_node(sp, StmtKind::Assign("result".into(), zero));
            body = Stmt::seq(body, ret_stmt);
        }
        Ok(MethodDef { span, name, params, ret, pre, post, body, locals })
    }

    fn params(&mut self) -> Result<Vec<(Type, String)>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let ty = self.ty()?;
                let (x, _) = self.ident()?;
                out.push((ty, x));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(out)
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "int" => Type::Int,
                    "bool" => Type::Bool,
                    "char" => Type::Char,
                    _ => Type::Struct(s),
                })
            }
            other => self.err(format!("expected type, found {}", other)),
        }
    }

    fn is_type_start(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) if matches!(s.as_str(), "int" | "bool" | "char") => true,
            Tok::Ident(_) => matches!(self.peek2(), Tok::Ident(_)),
            _ => false,
        }
    }

    // -- statements ---------------------------------------------------------

    fn block(&mut self, locals: &mut Vec<(String, Type)>) -> Result<Stmt, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            stmts.push(self.stmt(locals)?);
        }
        self.expect(Tok::RBrace)?;
        Ok(seq_all(stmts))
    }

    fn stmt_or_block(&mut self, locals: &mut Vec<(String, Type)>) -> Result<Stmt, ParseError> {
        if *self.peek() == Tok::LBrace {
            self.block(locals)
        } else {
            self.stmt(locals)
        }
    }

    fn stmt(&mut self, locals: &mut Vec<(String, Type)>) -> Result<Stmt, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_s = self.stmt_or_block(locals)?;
                let else_s = if *self.peek() == Tok::Else {
                    self.bump();
                    self.stmt_or_block(locals)?
                } else {
                    Stmt::skip()
                };
                Ok(self.stmt_node(span, StmtKind::If(cond, then_s, else_s)))
            }
            Tok::While => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Invariant)?;
                let inv = self.gformula()?;
                let body = self.stmt_or_block(locals)?;
                Ok(self.stmt_node(span, StmtKind::While(cond, inv, body)))
            }
            Tok::Assert => {
                self.bump();
                if *self.peek() == Tok::Question {
                    return self.err("assert takes a precise formula");
                }
                let f = self.formula()?;
                self.expect(Tok::Semi)?;
                Ok(self.stmt_node(span, StmtKind::Assert(f)))
            }
            Tok::Fold => {
                self.bump();
                let (p, _) = self.ident()?;
                let args = self.call_args()?;
                self.expect(Tok::Semi)?;
                Ok(self.stmt_node(span, StmtKind::Fold(p, args)))
            }
            Tok::Unfold => {
                self.bump();
                let (p, _) = self.ident()?;
                let args = self.call_args()?;
                self.expect(Tok::Semi)?;
                Ok(self.stmt_node(span, StmtKind::Unfold(p, args)))
            }
            Tok::Ident(_) if self.is_type_start() => {
                // declaration: T x; or T x = rhs;
                let ty = self.ty()?;
                let (x, _) = self.ident()?;
                locals.push((x.clone(), ty));
                if *self.peek() == Tok::Semi {
                    self.bump();
                    return Ok(Stmt::skip());
                }
                self.expect(Tok::Assign)?;
                let s = self.assign_rhs(span, x)?;
                self.expect(Tok::Semi)?;
                Ok(s)
            }
            Tok::Ident(x) => {
                self.bump();
                match self.peek().clone() {
                    Tok::Dot => {
                        self.bump();
                        let (f, _) = self.ident()?;
                        self.expect(Tok::Assign)?;
                        let e = self.expr()?;
                        self.expect(Tok::Semi)?;
                        Ok(self.stmt_node(span, StmtKind::AssignField(x, f, e)))
                    }
                    Tok::Assign => {
                        self.bump();
                        let s = self.assign_rhs(span, x)?;
                        self.expect(Tok::Semi)?;
                        Ok(s)
                    }
                    Tok::LParen => {
                        // bare call statement: desugar to ghost-target call
                        let args = self.call_args()?;
                        self.expect(Tok::Semi)?;
                        self.ghost += 1;
                        let tgt = format!("_v{}", self.ghost);
                        // callee return type unknown here; the well-formedness
                        // pass infers ghost-target types from the callee.
                        Ok(self.stmt_node(span, StmtKind::Call(tgt, x, args)))
                    }
                    other => self.err(format!("expected `=`, `.` or `(`, found {}", other)),
                }
            }
            other => self.err(format!("expected statement, found {}", other)),
        }
    }

    fn assign_rhs(&mut self, span: Span, target: String) -> Result<Stmt, ParseError> {
        match (self.peek().clone(), self.peek2().clone()) {
            (Tok::Alloc, _) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (s, _) = self.ident()?;
                self.expect(Tok::RParen)?;
                Ok(self.stmt_node(span, StmtKind::Alloc(target, s)))
            }
            (Tok::Ident(m), Tok::LParen) => {
                self.bump();
                let args = self.call_args()?;
                Ok(self.stmt_node(span, StmtKind::Call(target, m, args)))
            }
            _ => {
                let e = self.expr()?;
                Ok(self.stmt_node(span, StmtKind::Assign(target, e)))
            }
        }
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    // -- formulas -----------------------------------------------------------

    fn gformula(&mut self) -> Result<GFormula, ParseError> {
        let span = self.span();
        if *self.peek() == Tok::Question {
            self.bump();
            if *self.peek() == Tok::Star {
                self.bump();
                let body = self.formula()?;
                Ok(GFormula { span, imprecise: true, body })
            } else {
                // bare `?` is shorthand for `? * true`
                let body = Formula {
                    span,
                    kind: FormulaKind::Expr(Expr::new(span, ExprKind::BoolLit(true))),
                };
                Ok(GFormula { span, imprecise: true, body })
            }
        } else {
            let body = self.formula()?;
            Ok(GFormula { span, imprecise: false, body })
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let first = self.formula_term()?;
        if *self.peek() == Tok::Star {
            self.bump();
            let rest = self.formula()?;
            let span = first.span.to(rest.span);
            Ok(Formula { span, kind: FormulaKind::Conj(Box::new(first), Box::new(rest)) })
        } else {
            Ok(first)
        }
    }

    fn formula_term(&mut self) -> Result<Formula, ParseError> {
        let span = self.span();
        match (self.peek().clone(), self.peek2().clone()) {
            (Tok::Acc, _) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                match e.kind {
                    ExprKind::Field(recv, field) => {
                        Ok(Formula { span, kind: FormulaKind::Acc(*recv, field) })
                    }
                    _ => self.err("acc(...) requires a field access e.f"),
                }
            }
            (Tok::Ident(p), Tok::LParen) => {
                self.bump();
                let args = self.call_args()?;
                Ok(Formula { span, kind: FormulaKind::Pred(p, args) })
            }
            (Tok::If, _) => self.formula_cond(span),
            (Tok::LParen, Tok::If) => {
                self.bump();
                let f = self.formula_cond(span)?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            (Tok::LParen, _) => {
                // Either a formula conditional `(e ? φ1 : φ2)`, a
                // parenthesized formula, or a parenthesized expression that
                // continues as an expression. Backtrack as needed.
                let save = self.pos;
                self.bump();
                if let Ok(e) = self.expr() {
                    if *self.peek() == Tok::Question {
                        self.bump();
                        let f1 = self.formula()?;
                        self.expect(Tok::Colon)?;
                        let f2 = self.formula()?;
                        self.expect(Tok::RParen)?;
                        return Ok(Formula {
                            span,
                            kind: FormulaKind::Cond(e, Box::new(f1), Box::new(f2)),
                        });
                    }
                }
                self.pos = save;
                let e = self.formula_expr()?;
                Ok(Formula { span, kind: FormulaKind::Expr(e) })
            }
            _ => {
                let e = self.formula_expr()?;
                Ok(Formula { span: e.span, kind: FormulaKind::Expr(e) })
            }
        }
    }

    /// `if e then φ1 else φ2` — the alternate spelling of a formula
    /// conditional (the `if` keyword has already been peeked, not consumed).
    fn formula_cond(&mut self, span: Span) -> Result<Formula, ParseError> {
        self.expect(Tok::If)?;
        let e = self.expr()?;
        match self.peek().clone() {
            Tok::Ident(s) if s == "then" => {
                self.bump();
            }
            other => return self.err(format!("expected `then`, found {}", other)),
        }
        let f1 = self.formula()?;
        self.expect(Tok::Else)?;
        let f2 = self.formula()?;
        Ok(Formula { span, kind: FormulaKind::Cond(e, Box::new(f1), Box::new(f2)) })
    }

    // -- expressions --------------------------------------------------------
    //
    // Precedence: || < && < == != < relational < + - < (* /) < ! < postfix.
    // `*` is never multiplication at the top level of a formula conjunct;
    // the formula parser only reaches here for a single conjunct, and the
    // expression parser consumes `*` freely — so multiplication inside a
    // formula requires parentheses, which the conjunct parser guarantees by
    // treating any unparenthesized `*` after a complete expression as the
    // separating conjunction.

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let saved = self.no_mul;
        self.no_mul = false;
        let r = self.expr_or();
        self.no_mul = saved;
        r
    }

    /// Expression at the top level of a formula conjunct: `*` is left for
    /// the conjunction.
    fn formula_expr(&mut self) -> Result<Expr, ParseError> {
        let saved = self.no_mul;
        self.no_mul = true;
        let r = self.expr_or();
        self.no_mul = saved;
        r
    }

    fn expr_or(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.expr_and()?;
        while *self.peek() == Tok::OrOr {
            self.bump();
            let rhs = self.expr_and()?;
            let span = e.span.to(rhs.span);
            e = Expr::new(span, ExprKind::Or(Box::new(e), Box::new(rhs)));
        }
        Ok(e)
    }

    fn expr_and(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.expr_eq()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            let rhs = self.expr_eq()?;
            let span = e.span.to(rhs.span);
            e = Expr::new(span, ExprKind::And(Box::new(e), Box::new(rhs)));
        }
        Ok(e)
    }

    fn expr_eq(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.expr_rel()?;
        loop {
            let op = match self.peek() {
                Tok::EqEq => BinOp::Eq,
                Tok::NotEq => BinOp::Ne,
                _ => break,
            };
            self.bump();
            let rhs = self.expr_rel()?;
            let span = e.span.to(rhs.span);
            e = Expr::new(span, ExprKind::Binary(op, Box::new(e), Box::new(rhs)));
        }
        Ok(e)
    }

    fn expr_rel(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.expr_add()?;
        loop {
            let op = match self.peek() {
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                _ => break,
            };
            self.bump();
            let rhs = self.expr_add()?;
            let span = e.span.to(rhs.span);
            e = Expr::new(span, ExprKind::Binary(op, Box::new(e), Box::new(rhs)));
        }
        Ok(e)
    }

    fn expr_add(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.expr_mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.expr_mul()?;
            let span = e.span.to(rhs.span);
            e = Expr::new(span, ExprKind::Binary(op, Box::new(e), Box::new(rhs)));
        }
        Ok(e)
    }

    fn expr_mul(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.expr_unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star if self.no_mul => break,
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.expr_unary()?;
            let span = e.span.to(rhs.span);
            e = Expr::new(span, ExprKind::Binary(op, Box::new(e), Box::new(rhs)));
        }
        Ok(e)
    }

    fn expr_unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Not {
            let sp = self.span();
            self.bump();
            let inner = self.expr_unary()?;
            let span = sp.to(inner.span);
            Ok(Expr::new(span, ExprKind::Not(Box::new(inner))))
        } else {
            self.expr_postfix()
        }
    }

    fn expr_postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.expr_primary()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            let (f, fsp) = self.ident()?;
            let span = e.span.to(fsp);
            e = Expr::new(span, ExprKind::Field(Box::new(e), f));
        }
        Ok(e)
    }

    fn expr_primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::new(span, ExprKind::IntLit(n)))
            }
            Tok::Char(c) => {
                self.bump();
                Ok(Expr::new(span, ExprKind::CharLit(c)))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::new(span, ExprKind::BoolLit(true)))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::new(span, ExprKind::BoolLit(false)))
            }
            Tok::Null => {
                self.bump();
                Ok(Expr::new(span, ExprKind::Null))
            }
            Tok::Ident(x) => {
                self.bump();
                Ok(Expr::new(span, ExprKind::Var(x)))
            }
            Tok::Minus => {
                // negative integer literal only
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(Expr::new(span, ExprKind::IntLit(-n)))
                    }
                    _ => self.err("`-` is only allowed on integer literals"),
                }
            }
            Tok::LParen => {
                self.bump();
                let saved = self.no_mul;
                self.no_mul = false;
                let e = self.expr();
                self.no_mul = saved;
                let e = e?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => self.err(format!("expected expression, found {}", other)),
        }
    }
}

fn seq_all(stmts: Vec<Stmt>) -> Stmt {
    let mut stmts: Vec<Stmt> = stmts.into_iter().filter(|s| !s.is_skip()).collect();
    match stmts.len() {
        0 => Stmt::skip(),
        1 => stmts.pop().unwrap(),
        _ => {
            let mut it = stmts.into_iter().rev();
            let mut acc = it.next().unwrap();
            for s in it {
                acc = Stmt::seq(s, acc);
            }
            acc
        }
    }
}
