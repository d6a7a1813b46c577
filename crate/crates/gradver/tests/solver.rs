//! Oracle tests for the entailment engine.
//!
//! Boolean-only queries are compared against exhaustive truth tables;
//! integer queries are checked one-sidedly against small-domain enumeration
//! (the engine may say Unknown, but Proved/Unsat must never contradict the
//! oracle).

use gradver::ast::BinOp;
use gradver::symbolic::{implies, sat, Sat, Term, Truth};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const NSYMS: u32 = 3;

fn gen_bool(rng: &mut StdRng, depth: u32) -> Term {
    if depth == 0 || rng.gen_ratio(1, 5) {
        return match rng.gen_range(0..3) {
            0 => Term::Lit(gradver::symbolic::Lit::Bool(rng.gen())),
            _ => Term::sym(rng.gen_range(0..NSYMS)),
        };
    }
    match rng.gen_range(0..3) {
        0 => Term::Not(gen_bool(rng, depth - 1).into()),
        1 => Term::And(gen_bool(rng, depth - 1).into(), gen_bool(rng, depth - 1).into()),
        _ => Term::Or(gen_bool(rng, depth - 1).into(), gen_bool(rng, depth - 1).into()),
    }
}

fn eval_bool(t: &Term, m: &[bool]) -> bool {
    match t {
        Term::Lit(gradver::symbolic::Lit::Bool(b)) => *b,
        Term::Lit(_) => unreachable!(),
        Term::Sym(v) => m[*v as usize],
        Term::Not(a) => !eval_bool(a, m),
        Term::And(a, b) => eval_bool(a, m) && eval_bool(b, m),
        Term::Or(a, b) => eval_bool(a, m) || eval_bool(b, m),
        Term::Bin(..) => unreachable!(),
    }
}

fn bool_models() -> Vec<Vec<bool>> {
    (0..1u32 << NSYMS)
        .map(|bits| (0..NSYMS).map(|i| bits & (1 << i) != 0).collect())
        .collect()
}

#[test]
fn entailment_matches_truth_tables_on_boolean_terms() {
    let mut rng = StdRng::seed_from_u64(05);
    let models = bool_models();
    for _ in 0..12_000 {
        let pc: Vec<Term> = (0..rng.gen_range(1..=3)).map(|_| gen_bool(&mut rng, 3)).collect();
        let goal = gen_bool(&mut rng, 3);
        let valid = models
            .iter()
            .all(|m| !pc.iter().all(|t| eval_bool(t, m)) || eval_bool(&goal, m));
        let both_sat = models
            .iter()
            .any(|m| pc.iter().all(|t| eval_bool(t, m)) && eval_bool(&goal, m));
        match implies(&pc, &goal) {
            Truth::Proved => assert!(valid, "unsound Proved: {:?} ⟹ {}", pc, goal),
            Truth::Disproved => {
                assert!(!both_sat, "unsound Disproved: {:?} vs {}", pc, goal)
            }
            Truth::Unknown => {
                // Boolean-only queries within the atom budget must be exact.
                assert!(!valid && both_sat, "imprecise on booleans: {:?} vs {}", pc, goal);
            }
        }
        // Exactness in the other direction too.
        if valid {
            assert_eq!(implies(&pc, &goal), Truth::Proved);
        }
    }
}

#[test]
fn sat_matches_truth_tables_on_boolean_terms() {
    let mut rng = StdRng::seed_from_u64(11);
    let models = bool_models();
    for _ in 0..6_000 {
        let terms: Vec<Term> = (0..rng.gen_range(1..=4)).map(|_| gen_bool(&mut rng, 3)).collect();
        let satisfiable = models.iter().any(|m| terms.iter().all(|t| eval_bool(t, m)));
        match sat(&terms) {
            Sat::Sat => assert!(satisfiable, "wrong Sat: {:?}", terms),
            Sat::Unsat => assert!(!satisfiable, "wrong Unsat: {:?}", terms),
            Sat::Unknown => panic!("Unknown on pure boolean query: {:?}", terms),
        }
    }
}

// -- integer fragment -------------------------------------------------------

fn gen_int_atom(rng: &mut StdRng, arith: bool) -> Term {
    let side = |rng: &mut StdRng| -> Term {
        match rng.gen_range(0..3) {
            0 => Term::int(rng.gen_range(-3..=3)),
            _ => Term::sym(rng.gen_range(0..NSYMS)),
        }
    };
    let a = side(rng);
    let b = side(rng);
    let b = if arith && rng.gen_ratio(1, 3) {
        let op = [BinOp::Add, BinOp::Sub][rng.gen_range(0..2)];
        Term::Bin(op, b.into(), Term::int(rng.gen_range(-2..=2)).into())
    } else {
        b
    };
    let op = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge]
        [rng.gen_range(0..6)];
    Term::Bin(op, a.into(), b.into())
}

fn eval_int(t: &Term, m: &[i64]) -> i64 {
    match t {
        Term::Lit(gradver::symbolic::Lit::Int(n)) => *n,
        Term::Sym(v) => m[*v as usize],
        Term::Bin(BinOp::Add, a, b) => eval_int(a, m).wrapping_add(eval_int(b, m)),
        Term::Bin(BinOp::Sub, a, b) => eval_int(a, m).wrapping_sub(eval_int(b, m)),
        _ => unreachable!(),
    }
}

fn eval_int_atom(t: &Term, m: &[i64]) -> bool {
    match t {
        Term::Bin(op, a, b) => {
            let (x, y) = (eval_int(a, m), eval_int(b, m));
            match op {
                BinOp::Eq => x == y,
                BinOp::Ne => x != y,
                BinOp::Lt => x < y,
                BinOp::Le => x <= y,
                BinOp::Gt => x > y,
                BinOp::Ge => x >= y,
                _ => unreachable!(),
            }
        }
        _ => unreachable!(),
    }
}

fn int_models() -> Vec<Vec<i64>> {
    let dom: Vec<i64> = (-5..=5).collect();
    let mut out = Vec::new();
    for &a in &dom {
        for &b in &dom {
            for &c in &dom {
                out.push(vec![a, b, c]);
            }
        }
    }
    out
}

#[test]
fn integer_entailment_is_sound_against_small_domains() {
    let mut rng = StdRng::seed_from_u64(17);
    let models = int_models();
    for case in 0..3_000 {
        let arith = case % 2 == 0;
        let pc: Vec<Term> =
            (0..rng.gen_range(1..=3)).map(|_| gen_int_atom(&mut rng, arith)).collect();
        let goal = gen_int_atom(&mut rng, arith);
        match implies(&pc, &goal) {
            Truth::Proved => {
                // Must hold on every small-domain model of pc.
                for m in &models {
                    if pc.iter().all(|t| eval_int_atom(t, m)) {
                        assert!(
                            eval_int_atom(&goal, m),
                            "unsound Proved: {:?} ⟹ {} fails at {:?}",
                            pc,
                            goal,
                            m
                        );
                    }
                }
            }
            Truth::Disproved => {
                for m in &models {
                    assert!(
                        !(pc.iter().all(|t| eval_int_atom(t, m)) && eval_int_atom(&goal, m)),
                        "unsound Disproved: {:?} vs {} at {:?}",
                        pc,
                        goal,
                        m
                    );
                }
            }
            Truth::Unknown => {}
        }
    }
}

#[test]
fn integer_unsat_is_sound_against_small_domains() {
    let mut rng = StdRng::seed_from_u64(23);
    let models = int_models();
    for case in 0..3_000 {
        let arith = case % 2 == 0;
        let terms: Vec<Term> =
            (0..rng.gen_range(1..=4)).map(|_| gen_int_atom(&mut rng, arith)).collect();
        if sat(&terms) == Sat::Unsat {
            for m in &models {
                assert!(
                    !terms.iter().all(|t| eval_int_atom(t, m)),
                    "wrong Unsat: {:?} has model {:?}",
                    terms,
                    m
                );
            }
        }
    }
}

#[test]
fn known_judgements() {
    let x = Term::sym(0);
    let y = Term::sym(1);
    let z = Term::sym(2);
    let eq = |a: &Term, b: &Term| Term::Bin(BinOp::Eq, a.clone().into(), b.clone().into());
    let lt = |a: &Term, b: &Term| Term::Bin(BinOp::Lt, a.clone().into(), b.clone().into());

    // Transitivity of equality via congruence classes.
    assert_eq!(implies(&[eq(&x, &y), eq(&y, &z)], &eq(&x, &z)), Truth::Proved);
    // Reflexivity.
    assert_eq!(implies(&[], &eq(&x, &x)), Truth::Proved);
    // Bounds conflict.
    assert_eq!(sat(&[lt(&x, &Term::int(0)), lt(&Term::int(0), &x)]), Sat::Unsat);
    // Null disequality.
    let ne_null = Term::Bin(BinOp::Ne, x.clone().into(), Term::null().into());
    assert_eq!(implies(&[ne_null.clone()], &eq(&x, &Term::null())), Truth::Disproved);
    // Value propagation through arithmetic.
    let xp1 = Term::Bin(BinOp::Add, x.clone().into(), Term::int(1).into());
    assert_eq!(
        implies(&[eq(&x, &Term::int(2))], &eq(&xp1, &Term::int(3))),
        Truth::Proved
    );
    // Strict self-comparison is contradictory.
    assert_eq!(sat(&[lt(&x, &x)]), Sat::Unsat);
}
