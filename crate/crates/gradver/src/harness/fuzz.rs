//! Seeded random-program fuzzing with differential execution.
//!
//! Programs are generated as source text, rejection-sampled through the
//! frontend and the static verifier, then executed in both guarded and full
//! mode and co-executed against the state graph. Two findings are flagged:
//! a guarded run that completes where the full-check run gets stuck, and any
//! co-execution correspondence violation. Flagged programs are shrunk by
//! deleting whole statements while the finding still reproduces.
//!
//! Generation is deterministic per seed. Calls form a DAG (helpers only call
//! earlier helpers) and loops are bounded counters, so every generated
//! program terminates.

use super::coexec::{coexecute, CoExecOpts};
use crate::ast::Program;
use crate::parser::parse_program;
use crate::runtime::{run, Mode, Outcome, RunOpts};
use crate::verifier::{verify, CheckKind, VerifyReport};
use crate::wf::check_well_formed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct FuzzConfig {
    pub seed: u64,
    pub count: usize,
    /// Probability that any one contract or invariant is made imprecise.
    pub imprecision: f64,
    pub step_limit: usize,
    /// Also co-execute every accepted program.
    pub coexec: bool,
}

impl Default for FuzzConfig {
    fn default() -> FuzzConfig {
        FuzzConfig { seed: 1, count: 100, imprecision: 0.3, step_limit: 20_000, coexec: true }
    }
}

#[derive(Debug, Clone)]
pub struct FuzzFlag {
    /// Index of the accepted program that produced the finding.
    pub index: usize,
    /// "differential" (guarded completes, full stuck) or "coexec".
    pub kind: String,
    pub detail: String,
    pub source: String,
    pub shrunk: String,
}

#[derive(Debug, Clone, Default)]
pub struct FuzzReport {
    pub seed: u64,
    /// Accepted (well-formed, statically verified) programs.
    pub generated: usize,
    pub attempts: usize,
    pub flags: Vec<FuzzFlag>,
    /// Emitted static checks by kind, summed over all accepted programs.
    pub bottom_checks: usize,
    pub value_checks: usize,
    pub perm_or_sep_checks: usize,
    /// Checks evaluated by the guarded interpreter, summed.
    pub guarded_checks_evaluated: usize,
    /// Programs whose guarded and full outcomes were identical.
    pub outcome_matches: usize,
}

impl FuzzReport {
    pub fn clean(&self) -> bool {
        self.flags.is_empty()
    }
}

pub fn fuzz(cfg: &FuzzConfig) -> FuzzReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rep = FuzzReport { seed: cfg.seed, ..FuzzReport::default() };
    let cap = cfg.count.saturating_mul(60).max(1000);
    while rep.generated < cfg.count && rep.attempts < cap {
        rep.attempts += 1;
        let gp = gen_program(&mut rng, cfg);
        let src = gp.render();
        let Some((program, report)) = accept(&src) else { continue };
        rep.generated += 1;
        for g in &report.graphs {
            for e in &g.edges {
                for c in &e.checks {
                    match &c.kind {
                        CheckKind::Bottom => rep.bottom_checks += 1,
                        CheckKind::Value(_) => rep.value_checks += 1,
                        CheckKind::Perm(_) | CheckKind::Sep(..) => rep.perm_or_sep_checks += 1,
                    }
                }
            }
        }

        let opts = |mode| RunOpts {
            mode,
            no_exclusion_frames: false,
            trace: false,
            step_limit: cfg.step_limit,
        };
        let guarded = run(&program, &report, opts(Mode::Guarded));
        let full = run(&program, &report, opts(Mode::Full));
        rep.guarded_checks_evaluated += guarded.checks_evaluated;
        if guarded.outcome == full.outcome {
            rep.outcome_matches += 1;
        }
        if guarded.outcome.is_completed() && matches!(full.outcome, Outcome::Stuck { .. }) {
            let detail = format!(
                "guarded: {:?}, full: {:?}",
                guarded.outcome, full.outcome
            );
            let shrunk = shrink(&gp, cfg, |p, r| {
                let g = run(p, r, opts(Mode::Guarded));
                let f = run(p, r, opts(Mode::Full));
                g.outcome.is_completed() && matches!(f.outcome, Outcome::Stuck { .. })
            });
            rep.flags.push(FuzzFlag {
                index: rep.generated - 1,
                kind: "differential".to_string(),
                detail,
                source: src.clone(),
                shrunk,
            });
        }
        if cfg.coexec {
            let co = coexecute(
                &program,
                &report,
                CoExecOpts { no_exclusion_frames: false, step_limit: cfg.step_limit },
            );
            if !co.clean() {
                let detail = co
                    .violations
                    .iter()
                    .map(|v| format!("step {} [{}] {}", v.step, v.relation, v.detail))
                    .collect::<Vec<_>>()
                    .join("; ");
                let shrunk = shrink(&gp, cfg, |p, r| {
                    !coexecute(
                        p,
                        r,
                        CoExecOpts { no_exclusion_frames: false, step_limit: cfg.step_limit },
                    )
                    .clean()
                });
                rep.flags.push(FuzzFlag {
                    index: rep.generated - 1,
                    kind: "coexec".to_string(),
                    detail,
                    source: src.clone(),
                    shrunk,
                });
            }
        }
    }
    rep
}

/// Deterministically generate one random program source. Used by property
/// suites that want the generator without the differential loop.
pub fn gen_one(seed: u64, cfg: &FuzzConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_program(&mut rng, cfg).render()
}

/// Parse, well-formedness-check, and verify; `None` when any stage rejects.
pub fn accept(src: &str) -> Option<(Program, VerifyReport)> {
    let program = parse_program(src).ok()?;
    if !check_well_formed(&program).is_empty() {
        return None;
    }
    let report = verify(&program, false);
    if !report.ok() {
        return None;
    }
    Some((program, report))
}

/// Greedy statement-deletion shrinking: keep removing statements as long as
/// the finding reproduces on the reduced (still well-formed, still verified)
/// program.
fn shrink(gp: &GenProg, _cfg: &FuzzConfig, fails: impl Fn(&Program, &VerifyReport) -> bool) -> String {
    let mut cur = gp.clone();
    loop {
        let mut improved = false;
        'scan: for mi in 0..cur.methods.len() {
            for si in (0..cur.methods[mi].stmts.len()).rev() {
                let mut cand = cur.clone();
                cand.methods[mi].stmts.remove(si);
                let src = cand.render();
                if let Some((p, r)) = accept(&src) {
                    if fails(&p, &r) {
                        cur = cand;
                        improved = true;
                        break 'scan;
                    }
                }
            }
        }
        if !improved {
            return cur.render();
        }
    }
}

// -- generation -------------------------------------------------------------

#[derive(Debug, Clone)]
struct GenMethod {
    sig: String,
    requires: String,
    ensures: String,
    stmts: Vec<String>,
    tail: String,
}

#[derive(Debug, Clone)]
struct GenProg {
    prelude: String,
    methods: Vec<GenMethod>,
}

impl GenProg {
    fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.prelude);
        for m in &self.methods {
            out.push_str(&format!(
                "{}\n  requires {}\n  ensures {}\n{{\n",
                m.sig, m.requires, m.ensures
            ));
            for s in &m.stmts {
                out.push_str(s);
                out.push('\n');
            }
            out.push_str(&m.tail);
            out.push_str("\n}\n\n");
        }
        out
    }
}

/// Signature of a generated helper, as seen from a call site.
#[derive(Debug, Clone)]
struct HelperSig {
    name: String,
    int_params: usize,
    /// Field indices the ref parameter (if any) requires access to.
    ref_fields: Option<Vec<usize>>,
}

/// Variables in scope while generating one method body.
#[derive(Debug, Clone, Default)]
struct Scope {
    ints: Vec<String>,
    /// Ref variables with the field indices currently owned.
    refs: Vec<(String, Vec<usize>)>,
    next_var: usize,
}

impl Scope {
    fn fresh(&mut self, prefix: &str) -> String {
        let name = format!("{}{}", prefix, self.next_var);
        self.next_var += 1;
        name
    }
}

fn gen_program(rng: &mut ChaCha8Rng, cfg: &FuzzConfig) -> GenProg {
    let nf = rng.gen_range(1..=3usize);
    let fields: Vec<String> = (0..nf).map(|i| format!("f{}", i)).collect();
    let prelude = format!(
        "struct S {{ {} }}\n\n",
        fields.iter().map(|f| format!("int {};", f)).collect::<Vec<_>>().join(" ")
    );

    let mut methods = Vec::new();
    let mut helpers: Vec<HelperSig> = Vec::new();
    let n_helpers = rng.gen_range(0..=2usize);
    for hi in 0..n_helpers {
        let (m, sig) = gen_helper(rng, cfg, hi, nf, &helpers);
        methods.push(m);
        helpers.push(sig);
    }
    methods.push(gen_main(rng, cfg, nf, &helpers));
    GenProg { prelude, methods }
}

fn maybe_imprecise(rng: &mut ChaCha8Rng, cfg: &FuzzConfig, base: String) -> String {
    if rng.gen_bool(cfg.imprecision) {
        if base == "true" {
            "? * true".to_string()
        } else {
            format!("? * {}", base)
        }
    } else {
        base
    }
}

fn gen_helper(
    rng: &mut ChaCha8Rng,
    cfg: &FuzzConfig,
    index: usize,
    nf: usize,
    earlier: &[HelperSig],
) -> (GenMethod, HelperSig) {
    let name = format!("h{}", index + 1);
    let int_params = rng.gen_range(0..=2usize);
    let has_ref = rng.gen_bool(0.6);
    let mut scope = Scope::default();
    let mut params = Vec::new();
    for i in 0..int_params {
        let p = format!("a{}", i);
        params.push(format!("int {}", p));
        scope.ints.push(p);
    }
    let ref_fields = if has_ref {
        let mut fs: Vec<usize> = (0..nf).filter(|_| rng.gen_bool(0.7)).collect();
        if fs.is_empty() {
            fs.push(rng.gen_range(0..nf));
        }
        params.push("S r0".to_string());
        scope.refs.push(("r0".to_string(), fs.clone()));
        Some(fs)
    } else {
        None
    };
    let accs = match &ref_fields {
        Some(fs) => fs
            .iter()
            .map(|i| format!("acc(r0.f{})", i))
            .collect::<Vec<_>>()
            .join(" * "),
        None => "true".to_string(),
    };
    let requires = maybe_imprecise(rng, cfg, accs.clone());

    let mut stmts = Vec::new();
    let budget = rng.gen_range(0..=7usize);
    for _ in 0..budget {
        if let Some(s) = gen_stmt(rng, cfg, &mut scope, earlier, true, nf) {
            stmts.push(s);
        }
    }

    // Tie the tail to the post-condition when it constrains the result.
    let (ensures_base, tail) = if rng.gen_bool(0.4) {
        let e = atom(rng, &scope);
        let post = if accs == "true" {
            format!("result == {}", e)
        } else {
            format!("{} * result == {}", accs, e)
        };
        (post, format!("  result = {};", e))
    } else {
        (accs.clone(), format!("  result = {};", int_expr(rng, &scope, 1)))
    };
    let ensures = maybe_imprecise(rng, cfg, ensures_base);

    let sig = format!("int {}({})", name, params.join(", "));
    (
        GenMethod { sig, requires, ensures, stmts, tail },
        HelperSig { name, int_params, ref_fields },
    )
}

fn gen_main(rng: &mut ChaCha8Rng, cfg: &FuzzConfig, nf: usize, helpers: &[HelperSig]) -> GenMethod {
    let mut scope = Scope::default();
    let mut stmts = Vec::new();
    // Main owns what it allocates; start with one object so field and call
    // statements have material to work with.
    let r = scope.fresh("r");
    stmts.push(format!("  S {} = alloc(S);", r));
    scope.refs.push((r, (0..nf).collect()));
    let budget = rng.gen_range(2..=10usize);
    for _ in 0..budget {
        if let Some(s) = gen_stmt(rng, cfg, &mut scope, helpers, false, nf) {
            stmts.push(s);
        }
    }
    let tail = format!("  result = {};", int_expr(rng, &scope, 1));
    GenMethod {
        sig: "int main()".to_string(),
        requires: "true".to_string(),
        ensures: "true".to_string(),
        stmts,
        tail,
    }
}

/// One statement; `in_helper` only affects how often allocation happens.
/// `nf` is the struct's field count (a fresh allocation owns all of them).
fn gen_stmt(
    rng: &mut ChaCha8Rng,
    cfg: &FuzzConfig,
    scope: &mut Scope,
    helpers: &[HelperSig],
    in_helper: bool,
    nf: usize,
) -> Option<String> {
    for _ in 0..8 {
        match rng.gen_range(0..8u32) {
            0 => {
                let x = scope.fresh("v");
                let e = int_expr(rng, scope, 2);
                scope.ints.push(x.clone());
                return Some(format!("  int {} = {};", x, e));
            }
            1 if !scope.ints.is_empty() => {
                let x = pick(rng, &scope.ints).clone();
                return Some(format!("  {} = {};", x, int_expr(rng, scope, 2)));
            }
            2 if !scope.refs.is_empty() => {
                let (r, fs) = pick(rng, &scope.refs).clone();
                if fs.is_empty() {
                    continue;
                }
                let f = *pick(rng, &fs);
                return Some(format!("  {}.f{} = {};", r, f, int_expr(rng, scope, 1)));
            }
            3 if !scope.refs.is_empty() => {
                let (r, fs) = pick(rng, &scope.refs).clone();
                if fs.is_empty() {
                    continue;
                }
                let f = *pick(rng, &fs);
                let x = scope.fresh("v");
                scope.ints.push(x.clone());
                return Some(format!("  int {} = {}.f{};", x, r, f));
            }
            4 if !in_helper || rng.gen_bool(0.3) => {
                let r = scope.fresh("r");
                scope.refs.push((r.clone(), (0..nf).collect()));
                return Some(format!("  S {} = alloc(S);", r));
            }
            5 if !scope.ints.is_empty() => {
                // If with small same-scope branches; no declarations inside.
                let cond = cond_expr(rng, scope);
                let t = small_assign(rng, scope)?;
                let e = small_assign(rng, scope)?;
                return Some(format!(
                    "  if ({}) {{\n  {}\n  }} else {{\n  {}\n  }}",
                    cond, t, e
                ));
            }
            6 => {
                // Bounded counter loop.
                let c = scope.fresh("c");
                scope.ints.push(c.clone());
                let bound = rng.gen_range(2..=4);
                let mut body = vec![format!("    {} = {} - 1;", c, c)];
                let mut inv = "true".to_string();
                if rng.gen_bool(0.5) {
                    if let Some((r, fs)) = scope.refs.first().cloned() {
                        if !fs.is_empty() {
                            let f = *pick(rng, &fs);
                            inv = format!("acc({}.f{})", r, f);
                            if rng.gen_bool(0.6) {
                                body.push(format!(
                                    "    {}.f{} = {};",
                                    r,
                                    f,
                                    int_expr(rng, scope, 1)
                                ));
                            }
                        }
                    }
                }
                if let Some(s) = small_assign(rng, scope) {
                    body.push(format!("  {}", s));
                }
                let inv = maybe_imprecise(rng, cfg, inv);
                return Some(format!(
                    "  int {} = {};\n  while ({} > 0) invariant {} {{\n{}\n  }}",
                    c,
                    bound,
                    c,
                    inv,
                    body.join("\n")
                ));
            }
            7 if !helpers.is_empty() => {
                let h = pick(rng, helpers).clone();
                let mut args = Vec::new();
                for _ in 0..h.int_params {
                    args.push(int_expr(rng, scope, 1));
                }
                if let Some(needed) = &h.ref_fields {
                    let candidates: Vec<&(String, Vec<usize>)> = scope
                        .refs
                        .iter()
                        .filter(|(_, fs)| needed.iter().all(|f| fs.contains(f)))
                        .collect();
                    if candidates.is_empty() {
                        continue;
                    }
                    args.push(pick(rng, &candidates).0.clone());
                }
                let y = scope.fresh("v");
                scope.ints.push(y.clone());
                return Some(format!("  int {} = {}({});", y, h.name, args.join(", ")));
            }
            _ => continue,
        }
    }
    None
}

/// An assignment usable inside a branch or loop body: targets an existing
/// variable or an owned field, never declares.
fn small_assign(rng: &mut ChaCha8Rng, scope: &Scope) -> Option<String> {
    if !scope.refs.is_empty() && rng.gen_bool(0.3) {
        let (r, fs) = pick(rng, &scope.refs);
        if !fs.is_empty() {
            let f = *pick(rng, fs);
            return Some(format!("  {}.f{} = {};", r, f, int_expr(rng, scope, 1)));
        }
    }
    if scope.ints.is_empty() {
        return None;
    }
    let x = pick(rng, &scope.ints).clone();
    Some(format!("  {} = {};", x, int_expr(rng, scope, 1)))
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    &xs[rng.gen_range(0..xs.len())]
}

fn atom(rng: &mut ChaCha8Rng, scope: &Scope) -> String {
    if !scope.ints.is_empty() && rng.gen_bool(0.6) {
        pick(rng, &scope.ints).clone()
    } else {
        rng.gen_range(0..=9i64).to_string()
    }
}

fn int_expr(rng: &mut ChaCha8Rng, scope: &Scope, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.55) {
        return atom(rng, scope);
    }
    let op = *pick(rng, &["+", "-", "*"]);
    format!("({} {} {})", int_expr(rng, scope, depth - 1), op, int_expr(rng, scope, depth - 1))
}

fn cond_expr(rng: &mut ChaCha8Rng, scope: &Scope) -> String {
    let op = *pick(rng, &["==", "!=", "<", "<=", ">", ">="]);
    format!("{} {} {}", int_expr(rng, scope, 1), op, int_expr(rng, scope, 1))
}
