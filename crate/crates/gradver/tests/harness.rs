//! Co-execution and fuzzing harness tests.

use gradver::ast::Program;
use gradver::harness::{coexecute, fuzz, CoExecOpts, FuzzConfig};
use gradver::parser::parse_program as parse;
use gradver::runtime::Outcome;
use gradver::verifier::verify;
use gradver::wf::check_well_formed;

fn load(name: &str) -> Program {
    let path = format!("{}/corpus/{}", env!("CARGO_MANIFEST_DIR"), name);
    let src = std::fs::read_to_string(&path).unwrap();
    let p = parse(&src).unwrap_or_else(|e| panic!("{}: {:?}", name, e));
    assert!(check_well_formed(&p).is_empty());
    p
}

#[test]
fn coexecution_is_clean_on_the_terminating_corpus() {
    for name in ["list_append_precise.gvl", "list_append_gradual.gvl", "folded_cell_fixed.gvl"] {
        let p = load(name);
        let r = verify(&p, false);
        assert!(r.ok(), "{}", name);
        let co = coexecute(&p, &r, CoExecOpts::default());
        assert!(co.outcome.is_completed(), "{}: {:?}", name, co.outcome);
        assert!(co.clean(), "{}: {:#?}", name, co.violations);
    }
}

#[test]
fn coexecution_tolerates_the_step_limited_loop() {
    let p = load("loop_havoc.gvl");
    let r = verify(&p, false);
    assert!(r.ok());
    let co = coexecute(&p, &r, CoExecOpts { no_exclusion_frames: false, step_limit: 3_000 });
    assert_eq!(co.outcome, Outcome::StepLimit);
    assert!(co.clean(), "{:#?}", co.violations);
}

#[test]
fn coexecution_flags_the_unsound_run_without_exclusion_frames() {
    let p = load("folded_cell_unsound.gvl");
    let r = verify(&p, false);
    assert!(r.ok());
    let co = coexecute(&p, &r, CoExecOpts { no_exclusion_frames: true, step_limit: 100_000 });
    // The run itself completes with the contradictory result; the
    // correspondence relations catch the mismatch between the symbolic
    // state (which believes the fold hid the write) and the real heap.
    assert!(co.outcome.is_completed(), "{:?}", co.outcome);
    assert!(!co.clean(), "expected a correspondence violation");
    assert!(
        co.violations
            .iter()
            .any(|v| v.relation == "heap-chunk" || v.relation == "store"
                || v.relation == "path-condition"),
        "{:#?}",
        co.violations
    );
}

#[test]
fn coexecution_with_exclusion_frames_stops_at_the_failed_check() {
    let p = load("folded_cell_unsound.gvl");
    let r = verify(&p, false);
    let co = coexecute(&p, &r, CoExecOpts::default());
    assert!(matches!(co.outcome, Outcome::CheckFailed { .. }), "{:?}", co.outcome);
    // A failed check is the system working as intended, not a violation.
    assert!(co.clean(), "{:#?}", co.violations);
}

#[test]
fn fuzzing_is_deterministic_per_seed() {
    let cfg = FuzzConfig { seed: 7, count: 20, ..FuzzConfig::default() };
    let a = fuzz(&cfg);
    let b = fuzz(&cfg);
    assert_eq!(a.generated, b.generated);
    assert_eq!(a.attempts, b.attempts);
    assert_eq!(a.flags.len(), b.flags.len());
    assert_eq!(a.guarded_checks_evaluated, b.guarded_checks_evaluated);
    assert_eq!(
        a.flags.iter().map(|f| &f.source).collect::<Vec<_>>(),
        b.flags.iter().map(|f| &f.source).collect::<Vec<_>>()
    );
}

#[test]
fn fuzzing_a_small_batch_finds_no_soundness_flags() {
    let cfg = FuzzConfig { seed: 1, count: 60, ..FuzzConfig::default() };
    let rep = fuzz(&cfg);
    assert!(rep.generated >= 40, "only {} of {} attempts accepted", rep.generated, rep.attempts);
    assert!(rep.clean(), "{:#?}", rep.flags);
}

#[test]
fn fully_precise_fuzzing_emits_no_optimistic_checks() {
    let cfg = FuzzConfig { seed: 3, count: 40, imprecision: 0.0, ..FuzzConfig::default() };
    let rep = fuzz(&cfg);
    assert!(rep.generated >= 30, "only {} accepted", rep.generated);
    assert_eq!(rep.perm_or_sep_checks, 0);
    assert_eq!(rep.value_checks, 0);
    assert_eq!(rep.guarded_checks_evaluated, 0);
    assert_eq!(rep.outcome_matches, rep.generated);
    assert!(rep.clean(), "{:#?}", rep.flags);
}
