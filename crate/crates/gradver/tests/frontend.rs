//! Frontend tests: corpus parsing, pretty-print round-trips, and
//! well-formedness / self-framing diagnostics.

use gradver::ast::*;
use gradver::parser::parse_program;
use gradver::wf::{check_self_framing, check_well_formed, Framing};

fn corpus(name: &str) -> String {
    let path = format!("{}/corpus/{}", env!("CARGO_MANIFEST_DIR"), name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {}", path, e))
}

fn parse_ok(src: &str) -> Program {
    match parse_program(src) {
        Ok(p) => p,
        Err(e) => panic!("parse failed: {}", e),
    }
}

fn wf_ok(p: &Program) {
    let diags = check_well_formed(p);
    assert!(diags.is_empty(), "unexpected diagnostics: {:#?}", diags);
}

#[test]
fn corpus_parses_and_is_well_formed() {
    for name in [
        "list_append_precise.gvl",
        "list_append_gradual.gvl",
        "folded_cell_unsound.gvl",
        "folded_cell_fixed.gvl",
        "loop_havoc.gvl",
    ] {
        let p = parse_ok(&corpus(name));
        let diags = check_well_formed(&p);
        assert!(diags.is_empty(), "{}: {:#?}", name, diags);
        assert!(p.entry().is_some(), "{}: no main", name);
    }
}

#[test]
fn corpus_shapes() {
    let p = parse_ok(&corpus("list_append_precise.gvl"));
    assert_eq!(p.structs.len(), 1);
    assert_eq!(p.predicates.len(), 1);
    assert_eq!(p.methods.len(), 3);

    let p = parse_ok(&corpus("folded_cell_unsound.gvl"));
    let pred = p.predicate("imprecise").unwrap();
    assert!(pred.body.imprecise);
    // `void set` was desugared to a value-returning method.
    let set = p.method("set").unwrap();
    assert_eq!(set.ret, Type::Int);
}

#[test]
fn pretty_print_round_trips() {
    for name in [
        "list_append_precise.gvl",
        "list_append_gradual.gvl",
        "folded_cell_unsound.gvl",
        "folded_cell_fixed.gvl",
        "loop_havoc.gvl",
    ] {
        let p1 = parse_ok(&corpus(name));
        let printed = pretty_program(&p1);
        let p2 = match parse_program(&printed) {
            Ok(p) => p,
            Err(e) => panic!("{}: reparse failed: {}\n{}", name, e, printed),
        };
        assert_eq!(p1.structs.len(), p2.structs.len(), "{}", name);
        for (m1, m2) in p1.methods.iter().zip(&p2.methods) {
            assert!(m1.pre.equiv(&m2.pre), "{}: pre of {}", name, m1.name);
            assert!(m1.post.equiv(&m2.post), "{}: post of {}", name, m1.name);
            assert!(
                m1.body.normalize().equiv(&m2.body.normalize()),
                "{}: body of {}\n{}",
                name,
                m1.name,
                printed
            );
        }
        for (d1, d2) in p1.predicates.iter().zip(&p2.predicates) {
            assert!(d1.body.equiv(&d2.body), "{}: predicate {}", name, d1.name);
        }
    }
}

#[test]
fn minimal_program_parses() {
    let p = parse_ok("int main() requires true ensures true { result = 0; }");
    wf_ok(&p);
    assert_eq!(p.methods.len(), 1);
}

#[test]
fn contracts_are_optional() {
    let p = parse_ok("int main() { result = 0; }");
    wf_ok(&p);
    let m = p.method("main").unwrap();
    assert!(!m.pre.imprecise);
    assert!(matches!(
        m.pre.body.kind,
        FormulaKind::Expr(Expr { kind: ExprKind::BoolLit(true), .. })
    ));
}

#[test]
fn bare_question_mark_is_imprecise_true() {
    let p = parse_ok("int f() requires ? ensures ? { result = 0; }");
    let m = p.method("f").unwrap();
    assert!(m.pre.imprecise);
    assert!(matches!(
        m.pre.body.kind,
        FormulaKind::Expr(Expr { kind: ExprKind::BoolLit(true), .. })
    ));
}

#[test]
fn formula_conditional_spellings_agree() {
    let a = parse_ok(
        "struct S { S next; } predicate p(S x) = acc(x.next) * (if x.next == NULL then true else p(x.next))",
    );
    let b = parse_ok(
        "struct S { S next; } predicate p(S x) = acc(x.next) * (x.next == NULL ? true : p(x.next))",
    );
    assert!(a.predicates[0].body.equiv(&b.predicates[0].body));
}

#[test]
fn result_as_parameter_is_rejected() {
    assert!(parse_program("int f(int result) requires true ensures true { result = 0; }").is_err());
}

#[test]
fn syntax_errors_carry_positions() {
    let err = parse_program("int main() requires true ensures true {\n  result = ;\n}").unwrap_err();
    assert_eq!(err.line, 2);
}

#[test]
fn wf_rejects_post_mentioning_local() {
    let p = parse_ok("int f() requires true ensures n == 0 { n = 0; result = n; }");
    let diags = check_well_formed(&p);
    assert_eq!(diags.len(), 1, "{:#?}", diags);
    assert!(diags[0].msg.contains("post-condition"));
}

#[test]
fn wf_requires_imprecise_post_under_imprecise_pre() {
    let p = parse_ok("int f() requires ? ensures true { result = 0; }");
    let diags = check_well_formed(&p);
    assert!(diags.iter().any(|d| d.msg.contains("imprecise")), "{:#?}", diags);

    // The other direction (precise pre, imprecise post) is allowed.
    let p = parse_ok("int f() requires true ensures ? { result = 0; }");
    wf_ok(&p);
}

#[test]
fn wf_rejects_parameter_assignment() {
    let p = parse_ok("int f(int x) requires true ensures true { x = 1; result = x; }");
    let diags = check_well_formed(&p);
    assert!(diags.iter().any(|d| d.msg.contains("parameter")), "{:#?}", diags);
}

#[test]
fn wf_requires_result_on_every_path() {
    let p = parse_ok(
        "int f(bool b) requires true ensures true { if (b) { result = 1; } }",
    );
    let diags = check_well_formed(&p);
    assert!(diags.iter().any(|d| d.msg.contains("result")), "{:#?}", diags);
}

#[test]
fn wf_detects_use_before_assignment() {
    let p = parse_ok("int f() requires true ensures true { int n; result = n; }");
    let diags = check_well_formed(&p);
    assert!(diags.iter().any(|d| d.msg.contains("before assignment")), "{:#?}", diags);
}

#[test]
fn wf_type_errors() {
    let p = parse_ok("int f() requires true ensures true { result = true; }");
    assert!(!check_well_formed(&p).is_empty());

    let p = parse_ok("int f(bool b) requires true ensures true { result = b + 1; }");
    assert!(!check_well_formed(&p).is_empty());

    let p = parse_ok("struct S { int v; } int f(S s) requires acc(s.w) ensures true { result = 0; }");
    assert!(check_well_formed(&p).iter().any(|d| d.msg.contains("no field")));
}

fn formula_of(src: &str) -> GFormula {
    // Parse a contract in a dummy method to reuse the main grammar.
    let text = format!(
        "struct S {{ int value; S next; }} int f(S x, S y) requires {} ensures true {{ result = 0; }}",
        src
    );
    parse_ok(&text).methods[0].pre.clone()
}

#[test]
fn self_framing_accepts_framed_formulas() {
    for src in [
        "true",
        "acc(x.value) * x.value == 0",
        "acc(x.next) * (if x.next == NULL then true else acc(x.next.value))",
        "acc(x.next) * acc(x.next.value) * x.next.value == 2",
        "? * x.value == 0",
    ] {
        assert_eq!(check_self_framing(&formula_of(src)), Framing::Framed, "{}", src);
    }
}

#[test]
fn self_framing_rejects_unframed_dereferences() {
    for (src, witness) in [
        ("x.value == 0", "x.value"),
        ("x.value == 0 * acc(x.value)", "x.value"),
        ("acc(x.next.value)", "x.next"),
        ("acc(x.value) * y.value == 0", "y.value"),
        (
            "(if x.value == 0 then true else true)",
            "x.value",
        ),
    ] {
        assert_eq!(
            check_self_framing(&formula_of(src)),
            Framing::NotFramed(witness.into()),
            "{}",
            src
        );
    }
}

#[test]
fn conditional_framing_is_branch_local() {
    // acc inside one conditional branch does not frame uses after the
    // conditional.
    let g = formula_of("(if x == y then acc(x.value) else acc(x.value)) * x.value == 0");
    assert_eq!(check_self_framing(&g), Framing::Framed);
    let g = formula_of("(if x == y then acc(x.value) else true) * x.value == 0");
    assert_eq!(check_self_framing(&g), Framing::NotFramed("x.value".into()));
}
