//! Dynamic-semantics tests: full and guarded runs over the bundled corpus.

use gradver::ast::Program;
use gradver::parser::parse_program as parse;
use gradver::runtime::{run, Mode, Outcome, RunOpts, RunResult, Value};
use gradver::verifier::{verify, VerifyReport};
use gradver::wf::check_well_formed;

fn load(name: &str) -> Program {
    let path = format!("{}/corpus/{}", env!("CARGO_MANIFEST_DIR"), name);
    let src = std::fs::read_to_string(&path).unwrap();
    let p = parse(&src).unwrap_or_else(|e| panic!("{}: {:?}", name, e));
    let diags = check_well_formed(&p);
    assert!(diags.is_empty(), "{}: {:?}", name, diags);
    p
}

fn exec(p: &Program, r: &VerifyReport, mode: Mode, no_exclusion_frames: bool) -> RunResult {
    run(
        p,
        r,
        RunOpts { mode, no_exclusion_frames, trace: false, step_limit: 100_000 },
    )
}

#[test]
fn precise_append_completes_with_zero_guarded_checks() {
    let p = load("list_append_precise.gvl");
    let r = verify(&p, false);
    assert!(r.ok());
    let full = exec(&p, &r, Mode::Full, false);
    assert_eq!(full.outcome, Outcome::Completed(Value::Int(0)), "{:?}", full.outcome);
    let guarded = exec(&p, &r, Mode::Guarded, false);
    assert_eq!(guarded.outcome, Outcome::Completed(Value::Int(0)), "{:?}", guarded.outcome);
    assert_eq!(guarded.checks_evaluated, 0);
}

#[test]
fn gradual_append_passes_its_checks_in_both_modes() {
    let p = load("list_append_gradual.gvl");
    let r = verify(&p, false);
    assert!(r.ok());
    let full = exec(&p, &r, Mode::Full, false);
    assert_eq!(full.outcome, Outcome::Completed(Value::Int(0)), "{:?}", full.outcome);
    let guarded = exec(&p, &r, Mode::Guarded, false);
    assert_eq!(guarded.outcome, Outcome::Completed(Value::Int(0)), "{:?}", guarded.outcome);
    assert!(guarded.checks_evaluated > 0);
}

#[test]
fn folded_cell_guarded_stops_at_the_hidden_write() {
    let p = load("folded_cell_unsound.gvl");
    let r = verify(&p, false);
    assert!(r.ok());
    let guarded = exec(&p, &r, Mode::Guarded, false);
    match &guarded.outcome {
        Outcome::CheckFailed { check, span, .. } => {
            assert_eq!(check, "acc(c.value)");
            // The write inside `set`.
            let src = std::fs::read_to_string(format!(
                "{}/corpus/folded_cell_unsound.gvl",
                env!("CARGO_MANIFEST_DIR")
            ))
            .unwrap();
            let line = src.lines().nth(span.line as usize - 1).unwrap();
            assert!(line.contains("c.value = v"), "stopped at: {}", line);
        }
        o => panic!("expected a failed check, got {:?}", o),
    }
}

#[test]
fn folded_cell_without_exclusion_frames_reproduces_the_unsoundness() {
    let p = load("folded_cell_unsound.gvl");
    let r = verify(&p, false);

    // Guarded without exclusion frames: the statically-verified (but wrong)
    // post-condition of `test` is never re-checked, so the program completes
    // with the contradictory result.
    let guarded = exec(&p, &r, Mode::Guarded, true);
    assert_eq!(guarded.outcome, Outcome::Completed(Value::Int(1)), "{:?}", guarded.outcome);

    // Full checking with the same permission flow stops when `test`'s
    // post-condition `result == 0` fails.
    let full = exec(&p, &r, Mode::Full, true);
    match &full.outcome {
        Outcome::Stuck { reason, .. } => {
            assert!(reason.contains("post-condition"), "{}", reason);
            assert!(reason.contains("result == 0"), "{}", reason);
        }
        o => panic!("expected stuck at the post-condition, got {:?}", o),
    }
}

#[test]
fn fixed_cell_agrees_in_both_modes() {
    let p = load("folded_cell_fixed.gvl");
    let r = verify(&p, false);
    assert!(r.ok());
    let full = exec(&p, &r, Mode::Full, false);
    assert_eq!(full.outcome, Outcome::Completed(Value::Int(1)), "{:?}", full.outcome);
    let guarded = exec(&p, &r, Mode::Guarded, false);
    assert_eq!(guarded.outcome, Outcome::Completed(Value::Int(1)), "{:?}", guarded.outcome);
    assert_eq!(guarded.checks_evaluated, 0);
}

#[test]
fn infinite_loop_reaches_the_step_limit_with_per_iteration_checks() {
    let p = load("loop_havoc.gvl");
    let r = verify(&p, false);
    assert!(r.ok());
    for mode in [Mode::Full, Mode::Guarded] {
        let res = run(
            &p,
            &r,
            RunOpts { mode, no_exclusion_frames: false, trace: false, step_limit: 5_000 },
        );
        assert_eq!(res.outcome, Outcome::StepLimit, "{:?}: {:?}", mode, res.outcome);
    }
    // Guarded mode re-evaluates the acc(x.value) checks on every iteration.
    let guarded = run(
        &p,
        &r,
        RunOpts {
            mode: Mode::Guarded,
            no_exclusion_frames: false,
            trace: false,
            step_limit: 5_000,
        },
    );
    assert!(guarded.checks_evaluated > 100, "{}", guarded.checks_evaluated);
}

#[test]
fn trace_records_one_line_per_step() {
    let p = load("folded_cell_fixed.gvl");
    let r = verify(&p, false);
    let res = run(
        &p,
        &r,
        RunOpts { mode: Mode::Full, no_exclusion_frames: false, trace: true, step_limit: 100_000 },
    );
    assert!(res.outcome.is_completed());
    assert_eq!(res.trace.len(), res.steps);
    assert!(res.trace.iter().any(|l| l.contains("call-enter")));
    assert!(res.trace.iter().any(|l| l.contains("call-exit")));
}

#[test]
fn full_mode_blocks_an_unframed_read() {
    // `peek` demands no permissions but reads c.value anyway; verification
    // rejects it, and full-mode execution is stuck at the unframed read.
    let src = "
struct Cell { int value; }
int peek(Cell c)
  requires true
  ensures true
{
  result = c.value;
}
int main()
  requires true
  ensures true
{
  Cell c = alloc(Cell);
  c.value = 7;
  int x = peek(c);
  result = x;
}
";
    let p = parse(src).unwrap();
    assert!(check_well_formed(&p).is_empty());
    let r = verify(&p, false);
    assert!(!r.ok());
    let full = exec(&p, &r, Mode::Full, false);
    match &full.outcome {
        Outcome::Stuck { reason, .. } => assert!(reason.contains("framed"), "{}", reason),
        o => panic!("expected stuck, got {:?}", o),
    }
}

#[test]
fn division_by_zero_is_stuck() {
    let src = "
int main()
  requires true
  ensures true
{
  int x = 0;
  result = 1 / x;
}
";
    let p = parse(src).unwrap();
    let r = verify(&p, false);
    let full = exec(&p, &r, Mode::Full, false);
    assert!(matches!(full.outcome, Outcome::Stuck { .. }), "{:?}", full.outcome);
}

#[test]
fn loops_execute_concretely_with_invariants() {
    let src = "
int main()
  requires true
  ensures true
{
  int i = 0;
  int total = 0;
  while (i < 5) invariant true {
    i = i + 1;
    total = total + 2;
  }
  result = total;
}
";
    let p = parse(src).unwrap();
    assert!(check_well_formed(&p).is_empty());
    let r = verify(&p, false);
    assert!(r.ok(), "{:?}", r.failures);
    let full = exec(&p, &r, Mode::Full, false);
    assert_eq!(full.outcome, Outcome::Completed(Value::Int(10)), "{:?}", full.outcome);
    let guarded = exec(&p, &r, Mode::Guarded, false);
    assert_eq!(guarded.outcome, Outcome::Completed(Value::Int(10)), "{:?}", guarded.outcome);
    assert_eq!(guarded.checks_evaluated, 0);
}
