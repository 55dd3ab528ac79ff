use std::time::Duration;

use super::*;
use crate::enumerate::{solve_with, Limits, SolveOutcome, Strategy};
use crate::problem::parse_problem;
use crate::program::parse_term;

const MUL: &str = include_str!("../../../../benchmarks/semgus/imp-mul.sem");
const MUL_SOLUTION: &str = "($function ($while ($< $0 $y) ($seq ($y<- ($- $y $1)) ($r<- ($+ $r $x)))) $r)";
const MAX2: &str = include_str!("../../../../benchmarks/semgus/imp-max2.sem");
const MAX2_SOLUTION: &str = "($fn ($if ($< $x $y) ($r<- $y) ($r<- $x)))";
const UNSAT: &str = include_str!("../../../../benchmarks/semgus/arith-unsat.sem");

fn z3() -> SolverConfig {
    SolverConfig::for_executable("z3").with_time_limit(Duration::from_secs(10))
}

#[test]
fn one_function_per_node() {
    let p = parse_problem(UNSAT).unwrap();
    let t = parse_term(&p, "($+ $x $1)", "E").unwrap();
    let s = emit_smt_script(&t, &p).unwrap();
    assert_eq!(s.functions.len(), 3);
    let root = s.functions.iter().find(|f| f.node == 0).unwrap();
    for f in s.functions.iter().filter(|f| f.node != 0) {
        assert!(root.body.to_string().contains(&f.name), "{} not called from {}", f.name, root.body);
    }
    let leaf = parse_term(&p, "$0", "E").unwrap();
    assert_eq!(emit_smt_script(&leaf, &p).unwrap().functions.len(), 1);
}

#[test]
fn loops_become_one_recursive_function() {
    let p = parse_problem(MUL).unwrap();
    let t = parse_term(&p, MUL_SOLUTION, "F").unwrap();
    let s = emit_smt_script(&t, &p).unwrap();
    assert_eq!(s.functions.len(), 15);
    assert_eq!(s.recursive_count(), 1);
    assert_eq!(s.ground_assertions.len(), 6);
    assert!(s.negated.is_none());
    assert_eq!(s, emit_smt_script(&t, &p).unwrap());
}

#[test]
fn mul_solution_verifies_and_constant_is_refuted() {
    let p = parse_problem(MUL).unwrap();
    let good = parse_term(&p, MUL_SOLUTION, "F").unwrap();
    assert_eq!(verify_logical(&good, &p, &z3()).unwrap(), VerificationResult::Verified);
    let zero = parse_term(&p, "($function $noop $0)", "F").unwrap();
    assert_eq!(verify_logical(&zero, &p, &z3()).unwrap(), VerificationResult::Refuted(Binding::new()));
    let ev = Evaluator::new(&p);
    let checker = SpecChecker::new(&ev, 10_000, EvalMode::FirstMatch);
    let failed = (0..p.constraints().len()).filter(|&k| checker.check_ground(&zero, k) == Check::Fail).count();
    assert!(failed > 0);
    assert!((0..p.constraints().len()).all(|k| checker.check_ground(&good, k) == Check::Pass));
}

#[test]
fn universal_spec_verified_or_refuted_with_replayable_model() {
    let p = parse_problem(MAX2).unwrap();
    let good = parse_term(&p, MAX2_SOLUTION, "F").unwrap();
    assert_eq!(verify_logical(&good, &p, &z3()).unwrap(), VerificationResult::Verified);
    let bad = parse_term(&p, "($fn ($r<- $x))", "F").unwrap();
    let VerificationResult::Refuted(cex) = verify_logical(&bad, &p, &z3()).unwrap() else {
        panic!("expected a counterexample")
    };
    let ev = Evaluator::new(&p);
    let checker = SpecChecker::new(&ev, 10_000, EvalMode::FirstMatch);
    assert_eq!(checker.check_counterexample(&bad, &cex), Check::Fail);
    assert_eq!(checker.check_counterexample(&good, &cex), Check::Pass);
}

#[test]
fn cegis_solves_max2() {
    let p = parse_problem(MAX2).unwrap();
    let limits = Limits { timeout: Some(Duration::from_secs(120)), ..Limits::default() };
    let r = cegis(&p, Strategy::BottomUpSize, &z3(), &limits).unwrap();
    let SolveOutcome::Solution(t) = &r.outcome else { panic!("{:?}", r.outcome) };
    let n = r.stats.counterexamples.len();
    assert!((1..=10).contains(&n), "{n} counterexamples");
    assert!(r.stats.query_times.iter().all(|q| *q <= Duration::from_secs(10)));
    assert_eq!(verify_logical(t, &p, &z3()).unwrap(), VerificationResult::Verified);
}

#[test]
fn unsat_examples_exhaust_a_bounded_space() {
    let p = parse_problem(UNSAT).unwrap();
    let limits = Limits { max_level: Some(5), ..Limits::default() };
    let r = solve_with(&p, Strategy::BottomUpSize, &limits, &z3()).unwrap();
    assert_eq!(r.stats.verifier_calls, 0);
    assert!(matches!(r.outcome, SolveOutcome::Budget(_)), "{:?}", r.outcome);
}

#[test]
fn missing_solver_is_a_crash_error() {
    let p = parse_problem(MAX2).unwrap();
    let t = parse_term(&p, MAX2_SOLUTION, "F").unwrap();
    let cfg = SolverConfig::for_executable("/nonexistent/solver");
    assert!(matches!(verify_logical(&t, &p, &cfg), Err(SolverError::SolverCrash(_))));
}
