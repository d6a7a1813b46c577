//! Acceptance suite: seven end-to-end criteria, each reporting a single
//! PASS/FAIL line.

use gradver::ast::{
    BinOp, Expr, ExprKind, Formula, FormulaKind, GFormula, MethodDef, Program, Stmt, StmtKind,
    Type,
};
use gradver::harness::{accept, coexecute, fuzz, gen_one, CoExecOpts, FuzzConfig};
use gradver::parser::parse_program as parse;
use gradver::runtime::{
    assert_formula, efoot, foot, run, Env, Heap, Interp, Mode, Outcome, PermSet, Rcx, RunOpts,
    Value,
};
use gradver::span::Span;
use gradver::symbolic::{implies, Lit, Term, Truth};
use gradver::verifier::{explore::FINAL_SITE, verify, VerifyReport};
use gradver::wf::{check_self_framing, check_well_formed, Framing};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn load(name: &str) -> (Program, String) {
    let path = format!("{}/corpus/{}", env!("CARGO_MANIFEST_DIR"), name);
    let src = std::fs::read_to_string(&path).unwrap();
    let p = parse(&src).unwrap_or_else(|e| panic!("{}: {:?}", name, e));
    assert!(check_well_formed(&p).is_empty());
    (p, src)
}

fn report_line(n: u32, what: &str, ok: bool) {
    println!("criterion {} ({}): {}", n, what, if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {} failed: {}", n, what);
}

/// All (statement kind, id) pairs in a method body, in source order.
fn stmt_ids(m: &MethodDef) -> Vec<(&'static str, u32)> {
    fn walk(s: &Stmt, out: &mut Vec<(&'static str, u32)>) {
        let tag = match s.kind() {
            StmtKind::Skip => "skip",
            StmtKind::Seq(a, b) => {
                walk(a, out);
                walk(b, out);
                return;
            }
            StmtKind::Assign(..) => "assign",
            StmtKind::AssignField(..) => "assignfield",
            StmtKind::Alloc(..) => "alloc",
            StmtKind::Call(..) => "call",
            StmtKind::Assert(..) => "assert",
            StmtKind::Fold(..) => "fold",
            StmtKind::Unfold(..) => "unfold",
            StmtKind::If(..) => "if",
            StmtKind::While(..) => "while",
        };
        out.push((tag, s.id()));
        match s.kind() {
            StmtKind::If(_, a, b) => {
                walk(a, out);
                walk(b, out);
            }
            StmtKind::While(_, _, body) => walk(body, out),
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(&m.body, &mut out);
    out
}

fn all_checks(r: &VerifyReport) -> Vec<(String, u32, String)> {
    let mut out = Vec::new();
    for g in &r.graphs {
        for e in &g.edges {
            for c in &e.checks {
                out.push((g.method.clone(), e.site, c.src.to_string()));
            }
        }
    }
    out
}

// -- 1: a fully precise program needs no dynamic support --------------------

#[test]
fn criterion_1_precise_list_append() {
    let t0 = std::time::Instant::now();
    let (p, _) = load("list_append_precise.gvl");
    let r = verify(&p, false);
    let elapsed = t0.elapsed();

    let no_checks = all_checks(&r).is_empty();
    let no_exclusion = r.graphs.iter().all(|g| g.edges.iter().all(|e| e.exclusion.is_empty()));
    let append = p.method("append").unwrap();
    let if_id = stmt_ids(append).iter().find(|(t, _)| *t == "if").unwrap().1;
    let two_pruned_at_if = r.stats.pruned_by_site.get(&if_id) == Some(&2);
    let singleton = p.method("singleton").unwrap();
    let fold_id = stmt_ids(singleton).iter().find(|(t, _)| *t == "fold").unwrap().1;
    let pruned_at_fold = r.stats.pruned_by_site.get(&fold_id).copied().unwrap_or(0) >= 1;

    let ok = r.ok()
        && no_checks
        && no_exclusion
        && two_pruned_at_if
        && pruned_at_fold
        && elapsed.as_secs_f64() < 1.0;
    report_line(1, "precise append: no checks, expected pruning, < 1s", ok);
}

// -- 2: the gradual variant emits exactly the known residual checks ---------

#[test]
fn criterion_2_gradual_check_set() {
    let (p, _) = load("list_append_gradual.gvl");
    let r = verify(&p, false);

    let append = p.method("append").unwrap();
    let ids = stmt_ids(append);
    let if_id = ids.iter().find(|(t, _)| *t == "if").unwrap().1;
    let setnext_id = ids.iter().find(|(t, _)| *t == "assignfield").unwrap().1;

    let distinct: std::collections::BTreeSet<(String, u32, String)> =
        all_checks(&r).into_iter().collect();
    let expected: std::collections::BTreeSet<(String, u32, String)> = [
        ("append".to_string(), if_id, "acc(l.next)".to_string()),
        ("append".to_string(), setnext_id, "acc(l.next)".to_string()),
        ("append".to_string(), FINAL_SITE, "acyclic(result)".to_string()),
    ]
    .into_iter()
    .collect();
    let no_sep = distinct.iter().all(|(_, _, s)| !s.contains("sep("));

    let ok = r.ok() && distinct == expected && no_sep;
    report_line(2, "gradual append: exact residual check set, no sep checks", ok);
}

// -- 3: the folded-predicate unsoundness and its exclusion-frame fix --------

#[test]
fn criterion_3_unsoundness_reproduction() {
    let (p, src) = load("folded_cell_unsound.gvl");
    let r = verify(&p, false);
    let opts = |mode, no_frames| RunOpts {
        mode,
        no_exclusion_frames: no_frames,
        trace: false,
        step_limit: 100_000,
    };

    // (a) With exclusion frames the guarded run stops at the hidden write.
    let guarded = run(&p, &r, opts(Mode::Guarded, false));
    let stopped_at_write = match &guarded.outcome {
        Outcome::CheckFailed { check, span, .. } => {
            check == "acc(c.value)"
                && src
                    .lines()
                    .nth(span.line as usize - 1)
                    .map(|l| l.contains("c.value = v"))
                    .unwrap_or(false)
        }
        _ => false,
    };

    // (b) Without them, guarded completes with the contradictory result,
    // full checking fails the callee post-condition, and co-execution
    // records a correspondence violation.
    let guarded_nf = run(&p, &r, opts(Mode::Guarded, true));
    let completes_wrong = guarded_nf.outcome == Outcome::Completed(Value::Int(1));
    let full_nf = run(&p, &r, opts(Mode::Full, true));
    let full_fails_post = matches!(
        &full_nf.outcome,
        Outcome::Stuck { reason, .. }
            if reason.contains("post-condition") && reason.contains("result == 0")
    );
    let co = coexecute(&p, &r, CoExecOpts { no_exclusion_frames: true, step_limit: 100_000 });
    let coexec_flags = !co.clean();

    let ok = r.ok() && stopped_at_write && completes_wrong && full_fails_post && coexec_flags;
    report_line(3, "folded-cell unsoundness reproduced and fenced", ok);
}

// -- 4: differential and co-execution cleanliness at scale ------------------

#[test]
fn criterion_4_theorems_at_desk_scale() {
    let t0 = std::time::Instant::now();
    let mut ok = true;

    for name in [
        "list_append_precise.gvl",
        "list_append_gradual.gvl",
        "folded_cell_fixed.gvl",
        "loop_havoc.gvl",
    ] {
        let (p, _) = load(name);
        let r = verify(&p, false);
        ok &= r.ok();
        let opts = |mode| RunOpts {
            mode,
            no_exclusion_frames: false,
            trace: false,
            step_limit: 20_000,
        };
        let guarded = run(&p, &r, opts(Mode::Guarded));
        let full = run(&p, &r, opts(Mode::Full));
        // Differential soundness: guarded completing while full checking is
        // stuck would be a soundness flag.
        ok &= !(guarded.outcome.is_completed() && matches!(full.outcome, Outcome::Stuck { .. }));
        let co = coexecute(&p, &r, CoExecOpts { no_exclusion_frames: false, step_limit: 20_000 });
        ok &= co.clean();
    }

    let rep = fuzz(&FuzzConfig { seed: 20260824, count: 500, ..FuzzConfig::default() });
    ok &= rep.generated >= 500 && rep.clean();
    ok &= t0.elapsed().as_secs() < 300;
    report_line(4, "corpus + 500 fuzzed programs: zero soundness flags", ok);
}

// -- 5: entailment soundness against an exhaustive oracle -------------------

fn gen_bool_term(rng: &mut StdRng, depth: u32) -> Term {
    if depth == 0 || rng.gen_ratio(1, 5) {
        return match rng.gen_range(0..3) {
            0 => Term::Lit(Lit::Bool(rng.gen())),
            _ => Term::sym(rng.gen_range(0..3)),
        };
    }
    match rng.gen_range(0..3) {
        0 => Term::Not(gen_bool_term(rng, depth - 1).into()),
        1 => Term::And(gen_bool_term(rng, depth - 1).into(), gen_bool_term(rng, depth - 1).into()),
        _ => Term::Or(gen_bool_term(rng, depth - 1).into(), gen_bool_term(rng, depth - 1).into()),
    }
}

fn eval_bool_term(t: &Term, m: &[bool]) -> bool {
    match t {
        Term::Lit(Lit::Bool(b)) => *b,
        Term::Sym(v) => m[*v as usize],
        Term::Not(a) => !eval_bool_term(a, m),
        Term::And(a, b) => eval_bool_term(a, m) && eval_bool_term(b, m),
        Term::Or(a, b) => eval_bool_term(a, m) || eval_bool_term(b, m),
        _ => unreachable!("boolean-only generator"),
    }
}

#[test]
fn criterion_5_entailment_oracle() {
    let mut rng = StdRng::seed_from_u64(2024);
    let models: Vec<Vec<bool>> =
        (0..8u32).map(|bits| (0..3).map(|i| bits & (1 << i) != 0).collect()).collect();
    let mut cases = 0usize;
    let mut ok = true;
    for _ in 0..10_000 {
        let pc: Vec<Term> =
            (0..rng.gen_range(1..=3)).map(|_| gen_bool_term(&mut rng, 3)).collect();
        let goal = gen_bool_term(&mut rng, 3);
        cases += 1;
        if implies(&pc, &goal) == Truth::Proved {
            let valid = models
                .iter()
                .all(|m| !pc.iter().all(|t| eval_bool_term(t, m)) || eval_bool_term(&goal, m));
            ok &= valid;
        }
    }
    ok &= cases >= 10_000;
    report_line(5, "10^4 entailment cases, no unsound Proved", ok);
}

// -- 6: conservative extension on fully precise programs --------------------

#[test]
fn criterion_6_conservative_extension() {
    let rep = fuzz(&FuzzConfig {
        seed: 6,
        count: 200,
        imprecision: 0.0,
        ..FuzzConfig::default()
    });
    let ok = rep.generated >= 200
        && rep.perm_or_sep_checks == 0
        && rep.value_checks == 0
        && rep.guarded_checks_evaluated == 0
        && rep.outcome_matches == rep.generated
        && rep.clean();
    report_line(6, "200 precise programs: only-bottom checks, guarded == full", ok);
}

// -- 7: randomized dynamic-semantics properties -----------------------------

struct World {
    heap: Heap,
    env: Env,
    all_perms: Vec<(u32, String)>,
}

fn gen_world(rng: &mut StdRng) -> World {
    let mut heap = Heap::new();
    let fields =
        vec![(Type::Int, "f0".to_string()), (Type::Int, "f1".to_string())];
    let mut env = Env::new();
    let mut all_perms = Vec::new();
    let n = rng.gen_range(1..=3);
    for i in 0..n {
        let (l, perms) = heap.alloc("S", &fields);
        for (f, _) in [("f0", 0), ("f1", 1)] {
            heap.write(l, f, Value::Int(rng.gen_range(-3..=5)));
        }
        all_perms.extend(perms);
        env.insert(format!("x{}", i), Value::Ref(l));
    }
    if rng.gen_bool(0.2) {
        env.insert("xn".to_string(), Value::Null);
    }
    env.insert("i0".to_string(), Value::Int(rng.gen_range(-3..=5)));
    env.insert("i1".to_string(), Value::Int(rng.gen_range(-3..=5)));
    World { heap, env, all_perms }
}

fn e(kind: ExprKind) -> Expr {
    Expr::new(Span::default(), kind)
}

fn gen_int_atom(rng: &mut StdRng, world: &World) -> Expr {
    match rng.gen_range(0..4) {
        0 => e(ExprKind::IntLit(rng.gen_range(-3..=5))),
        1 => e(ExprKind::Var(if rng.gen() { "i0" } else { "i1" }.to_string())),
        _ => {
            let refs: Vec<&String> =
                world.env.keys().filter(|k| k.starts_with('x')).collect();
            let x = refs[rng.gen_range(0..refs.len())].clone();
            let f = if rng.gen() { "f0" } else { "f1" };
            e(ExprKind::Field(Box::new(e(ExprKind::Var(x))), f.to_string()))
        }
    }
}

fn gen_cmp(rng: &mut StdRng, world: &World) -> Expr {
    let ops = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge];
    e(ExprKind::Binary(
        ops[rng.gen_range(0..ops.len())],
        Box::new(gen_int_atom(rng, world)),
        Box::new(gen_int_atom(rng, world)),
    ))
}

fn f(kind: FormulaKind) -> Formula {
    Formula { span: Span::default(), kind }
}

fn gen_formula(rng: &mut StdRng, world: &World, depth: u32) -> Formula {
    if depth == 0 || rng.gen_ratio(2, 5) {
        return match rng.gen_range(0..3) {
            0 => f(FormulaKind::Expr(e(ExprKind::BoolLit(true)))),
            1 => f(FormulaKind::Expr(gen_cmp(rng, world))),
            _ => {
                let refs: Vec<&String> =
                    world.env.keys().filter(|k| k.starts_with('x')).collect();
                let x = refs[rng.gen_range(0..refs.len())].clone();
                let fld = if rng.gen() { "f0" } else { "f1" };
                f(FormulaKind::Acc(e(ExprKind::Var(x)), fld.to_string()))
            }
        };
    }
    match rng.gen_range(0..2) {
        0 => f(FormulaKind::Conj(
            Box::new(gen_formula(rng, world, depth - 1)),
            Box::new(gen_formula(rng, world, depth - 1)),
        )),
        _ => f(FormulaKind::Cond(
            gen_cmp(rng, world),
            Box::new(gen_formula(rng, world, depth - 1)),
            Box::new(gen_formula(rng, world, depth - 1)),
        )),
    }
}

fn tiny_program() -> Program {
    parse("struct S { int f0; int f1; }").unwrap()
}

fn random_perm_subset(rng: &mut StdRng, world: &World) -> PermSet {
    world
        .all_perms
        .iter()
        .filter(|_| rng.gen_bool(0.8))
        .cloned()
        .collect()
}

#[test]
fn criterion_7_dynamic_semantics_properties() {
    let program = tiny_program();
    let cx = Rcx::new(&program);
    let mut rng = StdRng::seed_from_u64(77);

    // Property A: assertion is monotone in the permission set.
    // Property B: a satisfied formula's exact footprint lies within the
    //             permissions it was asserted under.
    // Property C: the maximal footprint contains the exact footprint.
    let (mut held, mut a_ok, mut b_ok, mut c_ok) = (0usize, true, true, true);
    for _ in 0..30_000 {
        if held >= 1_500 {
            break;
        }
        let world = gen_world(&mut rng);
        let phi = GFormula {
            span: Span::default(),
            imprecise: rng.gen_bool(0.3),
            body: gen_formula(&mut rng, &world, 3),
        };
        // Specifications are self-framed; the footprint properties are
        // stated for those (a bare conditional over a dereference is not a
        // legal contract).
        if !matches!(check_self_framing(&phi), Framing::Framed) {
            continue;
        }
        let perms = random_perm_subset(&mut rng, &world);
        let Ok(true) = assert_formula(&cx, &world.heap, &perms, &world.env, &phi) else {
            continue;
        };
        held += 1;
        let full: PermSet = world.all_perms.iter().cloned().collect();
        a_ok &= matches!(assert_formula(&cx, &world.heap, &full, &world.env, &phi), Ok(true));
        if let Ok(ef) = efoot(&cx, &world.heap, &world.env, &phi) {
            b_ok &= ef.is_subset(&perms);
            if let Ok(ft) = foot(&cx, &world.heap, &perms, &world.env, &phi) {
                c_ok &= ef.is_subset(&ft);
            }
        }
    }
    let enough = held >= 1_000;
    report_line(7, "assert monotone over alpha", a_ok && enough);
    report_line(7, "efoot within asserted permissions", b_ok && enough);
    report_line(7, "efoot within foot", c_ok && enough);

    // Property D: fold/unfold are dynamic no-ops — deleting them never
    // changes a full-check run (exclusion frames disabled, since those are
    // derived from the static graph, which the deletion does change).
    // Property E: stack frames hold pairwise disjoint permissions after
    // every single step.
    let cfg = FuzzConfig { imprecision: 0.3, ..FuzzConfig::default() };
    let (mut d_cases, mut d_ok) = (0usize, true);
    let (mut e_cases, mut e_ok) = (0usize, true);
    for seed in 0..4_000u64 {
        if d_cases >= 1_000 && e_cases >= 1_000 {
            break;
        }
        let src = gen_one(seed, &cfg);
        let Some((p, r)) = accept(&src) else { continue };

        if d_cases < 1_000 {
            let with_folds = inject_folds(&src);
            if let Some((p2, r2)) = accept(&with_folds) {
                let opts = RunOpts {
                    mode: Mode::Full,
                    no_exclusion_frames: true,
                    trace: false,
                    step_limit: 20_000,
                };
                let base = run(&p, &r, opts.clone());
                let folded = run(&p2, &r2, opts);
                d_ok &= canonical(&base.outcome) == canonical(&folded.outcome);
                d_cases += 1;
            }
        }

        if e_cases < 1_000 {
            let opts = RunOpts {
                mode: Mode::Guarded,
                no_exclusion_frames: false,
                trace: false,
                step_limit: 20_000,
            };
            if let Ok(mut interp) = Interp::new(&p, &r, opts) {
                loop {
                    let done = interp.step_once().is_some();
                    for i in 0..interp.stack.len() {
                        for j in i + 1..interp.stack.len() {
                            e_ok &= interp.stack[i]
                                .perms
                                .is_disjoint(&interp.stack[j].perms);
                        }
                    }
                    if done {
                        break;
                    }
                }
                e_cases += 1;
            }
        }
    }
    report_line(7, "fold/unfold deletion is a dynamic no-op", d_ok && d_cases >= 1_000);
    report_line(7, "frame permissions stay pairwise disjoint", e_ok && e_cases >= 1_000);
}

/// Add a trivially foldable predicate and a balanced fold/unfold pair to the
/// entry method.
fn inject_folds(src: &str) -> String {
    let mut out = String::new();
    let mut in_main = false;
    for line in src.lines() {
        if line.starts_with("int main()") {
            in_main = true;
        }
        out.push_str(line);
        out.push('\n');
        if in_main && line.trim() == "{" {
            out.push_str("  fold T0();\n");
            in_main = false;
        }
    }
    // Unfold right before the final closing brace of main (the entry method
    // is rendered last).
    if let Some(pos) = out.rfind("  result = ") {
        out.insert_str(pos, "  unfold T0();\n");
    }
    out.push_str("\npredicate T0() = true\n");
    out
}

/// Outcome modulo source positions (fold insertion shifts line numbers).
fn canonical(o: &Outcome) -> String {
    match o {
        Outcome::Completed(v) => format!("completed {}", v),
        Outcome::StepLimit => "step-limit".to_string(),
        Outcome::CheckFailed { check, .. } => format!("check-failed {}", check),
        Outcome::Stuck { reason, .. } => {
            let r = reason.splitn(2, ": ").nth(1).unwrap_or(reason);
            format!("stuck {}", r)
        }
    }
}
