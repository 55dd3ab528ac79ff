use num_bigint::BigInt;
use proptest::prelude::*;

use super::*;
use crate::formula::{term_from_sexpr, BitVec};
use crate::problem::parse_problem;
use crate::program::parse_term;
use crate::sexpr::read_sexprs;

const MUL: &str = include_str!("../../../../benchmarks/semgus/imp-mul.sem");
const MUL_SOLUTION: &str = "($function ($while ($< $0 $y) ($seq ($y<- ($- $y $1)) ($r<- ($+ $r $x)))) $r)";

fn formula(text: &str) -> Term {
    let e = read_sexprs(text).unwrap().pop().unwrap();
    term_from_sexpr(&e, &|_| false, &|_| false).unwrap()
}

fn env(pairs: &[(&str, Value)]) -> Binding {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

#[test]
fn equality_and_subtraction() {
    let e = env(&[("xi", Value::int(3)), ("xo", Value::int(3)), ("y", Value::int(3))]);
    assert_eq!(eval_formula(&formula("(= xi xo)"), &e), Ok(Value::Bool(true)));
    assert_eq!(eval_formula(&formula("(- y 1)"), &e), Ok(Value::int(2)));
}

#[test]
fn bitvector_wraparound() {
    let v = eval_formula(&formula("(bvadd #xFF #x01)"), &Binding::new()).unwrap();
    assert_eq!(v, Value::BitVec(BitVec::from_u64(8, 0)));
    let v = eval_formula(&formula("(bvsub #x00 #x01)"), &Binding::new()).unwrap();
    assert_eq!(v, Value::BitVec(BitVec::from_u64(8, 255)));
    let v = eval_formula(&formula("(bvashr #x80 #x01)"), &Binding::new()).unwrap();
    assert_eq!(v, Value::BitVec(BitVec::from_u64(8, 0xc0)));
    let v = eval_formula(&formula("(bvudiv #x07 #x00)"), &Binding::new()).unwrap();
    assert_eq!(v, Value::BitVec(BitVec::from_u64(8, 0xff)));
}

#[test]
fn euclidean_division() {
    let e = Binding::new();
    assert_eq!(eval_formula(&formula("(mod (- 7) 3)"), &e), Ok(Value::int(2)));
    assert_eq!(eval_formula(&formula("(div (- 7) 3)"), &e), Ok(Value::int(-3)));
    assert_eq!(eval_formula(&formula("(div 7 (- 3))"), &e), Ok(Value::int(-2)));
    assert_eq!(eval_formula(&formula("(mod 7 (- 3))"), &e), Ok(Value::int(1)));
    assert_eq!(eval_formula(&formula("(div 1 0)"), &e), Err(FormulaError::DivByZero));
    // untaken branches are not evaluated
    assert_eq!(eval_formula(&formula("(ite true 1 (div 1 0))"), &e), Ok(Value::int(1)));
}

#[test]
fn unbound_variable() {
    assert_eq!(
        eval_formula(&formula("(+ q 1)"), &Binding::new()),
        Err(FormulaError::UnboundVariable("q".into()))
    );
}

#[test]
fn strings() {
    let e = Binding::new();
    assert_eq!(eval_formula(&formula(r#"(str.len (str.++ "ab" "c"))"#), &e), Ok(Value::int(3)));
    assert_eq!(eval_formula(&formula(r#"(str.at "abc" 1)"#), &e), Ok(Value::Str("b".into())));
    assert_eq!(eval_formula(&formula(r#"(str.at "abc" 5)"#), &e), Ok(Value::Str(String::new())));
    assert_eq!(eval_formula(&formula(r#"(str.contains "abc" "bc")"#), &e), Ok(Value::Bool(true)));
}

#[test]
fn mul_solution_on_all_examples() {
    let p = parse_problem(MUL).unwrap();
    let ev = Evaluator::new(&p);
    let t = parse_term(&p, MUL_SOLUTION, "F").unwrap();
    let (examples, rest) = extract_examples(&p);
    assert_eq!(examples.len(), 6);
    assert!(rest.is_empty());
    assert_eq!(run_examples(&ev, &t, &examples, DEFAULT_FUEL, EvalMode::FirstMatch), ExampleResult::Pass);
    assert_eq!(run_examples(&ev, &t, &examples, DEFAULT_FUEL, EvalMode::Strict), ExampleResult::Pass);
    let out = ev.evaluate_named(&t, "F.Sem", &[Value::int(5), Value::int(3)], DEFAULT_FUEL, EvalMode::FirstMatch);
    assert_eq!(out, Ok(EvalOutcome::Ok(vec![Value::int(15)])));
    let out = ev.evaluate_named(&t, "F.Sem", &[Value::int(0), Value::int(0)], DEFAULT_FUEL, EvalMode::FirstMatch);
    assert_eq!(out, Ok(EvalOutcome::Ok(vec![Value::int(0)])));
}

#[test]
fn noop_is_identity() {
    let p = parse_problem(MUL).unwrap();
    let ev = Evaluator::new(&p);
    let t = parse_term(&p, "$noop", "S").unwrap();
    let ins = [Value::int(4), Value::int(-2), Value::int(9)];
    let out = ev.evaluate_named(&t, "S.Sem", &ins, 10, EvalMode::FirstMatch);
    assert_eq!(out, Ok(EvalOutcome::Ok(ins.to_vec())));
}

#[test]
fn nonterminating_loop_runs_out_of_fuel() {
    let p = parse_problem(MUL).unwrap();
    let ev = Evaluator::new(&p);
    let t = parse_term(&p, "($while ($< $0 $1) $noop)", "S").unwrap();
    let ins = [Value::int(1), Value::int(2), Value::int(3)];
    let out = ev.evaluate_named(&t, "S.Sem", &ins, 10_000, EvalMode::FirstMatch);
    assert_eq!(out, Ok(EvalOutcome::FuelExhausted(10_000)));
    // a repeated loop state is recognized without spending the fuel
    let out = ev.evaluate_named(&t, "S.Sem", &ins, u64::MAX, EvalMode::FirstMatch);
    assert_eq!(out, Ok(EvalOutcome::FuelExhausted(u64::MAX)));
    // a long run with changing state does not exhaust the native stack
    let t = parse_term(&p, "($while ($< $0 $1) ($x<- ($+ $x $1)))", "S").unwrap();
    let out = ev.evaluate_named(&t, "S.Sem", &ins, 5_000_000, EvalMode::FirstMatch);
    assert_eq!(out, Ok(EvalOutcome::FuelExhausted(5_000_000)));
}

#[test]
fn constant_program_fails_first_example() {
    let p = parse_problem(MUL).unwrap();
    let ev = Evaluator::new(&p);
    let t = parse_term(&p, "($function $noop $0)", "F").unwrap();
    let (mut examples, _) = extract_examples(&p);
    examples.retain(|e| e.inputs == [Value::int(5), Value::int(3)]);
    match run_examples(&ev, &t, &examples, DEFAULT_FUEL, EvalMode::FirstMatch) {
        ExampleResult::Fail { index, got } => {
            assert_eq!(index, 0);
            assert_eq!(got, Ok(EvalOutcome::Ok(vec![Value::int(0)])));
        }
        ExampleResult::Pass => panic!("constant 0 is not multiplication"),
    }
    assert!(run_examples(&ev, &t, &[], DEFAULT_FUEL, EvalMode::FirstMatch).passed());
}

#[test]
fn strict_mode_reports_overlap() {
    let text = MUL.replace("(= b false)", "true");
    let p = parse_problem(&text).unwrap();
    let ev = Evaluator::new(&p);
    let t = parse_term(&p, "($while ($< $x $1) $noop)", "S").unwrap();
    let ins = [Value::int(0), Value::int(0), Value::int(0)];
    let first = ev.evaluate_named(&t, "S.Sem", &ins, 100, EvalMode::FirstMatch).unwrap();
    assert!(matches!(first, EvalOutcome::FuelExhausted(_)));
    let ins = [Value::int(5), Value::int(0), Value::int(0)];
    let strict = ev.evaluate_named(&t, "S.Sem", &ins, 100, EvalMode::Strict).unwrap();
    assert_eq!(strict, EvalOutcome::Ok(ins.to_vec()));
    let t = parse_term(&p, "($while ($< $x $1) ($x<- $1))", "S").unwrap();
    let ins = [Value::int(0), Value::int(0), Value::int(0)];
    let first = ev.evaluate_named(&t, "S.Sem", &ins, 100, EvalMode::FirstMatch).unwrap();
    assert_eq!(first, EvalOutcome::Ok(vec![Value::int(1), Value::int(0), Value::int(0)]));
    let strict = ev.evaluate_named(&t, "S.Sem", &ins, 100, EvalMode::Strict).unwrap();
    assert!(matches!(strict, EvalOutcome::NondetAmbiguity(ref c) if c.len() == 2), "{strict:?}");
}

#[test]
fn guard_failure_when_no_alternative_applies() {
    let text = MUL.replace("(= b false)", "(= b true)");
    let p = parse_problem(&text).unwrap();
    let ev = Evaluator::new(&p);
    let t = parse_term(&p, "($while ($< $x $0) $noop)", "S").unwrap();
    let ins = [Value::int(1), Value::int(0), Value::int(0)];
    let out = ev.evaluate_named(&t, "S.Sem", &ins, 100, EvalMode::FirstMatch);
    assert_eq!(out, Ok(EvalOutcome::GuardFailure));
}

#[test]
fn missing_plan_and_holes() {
    let text = MUL.replace("(($1) (= out 1))", "(($1) (> out 0))");
    let p = parse_problem(&text).unwrap();
    let ev = Evaluator::new(&p);
    let t = parse_term(&p, "$1", "E").unwrap();
    let ins = [Value::int(0), Value::int(0), Value::int(0)];
    assert!(matches!(
        ev.evaluate_named(&t, "E.Sem", &ins, 100, EvalMode::FirstMatch),
        Err(EvalError::MissingPlan { .. })
    ));
    let h = parse_term(&p, "($+ $x (?? E))", "E").unwrap();
    assert_eq!(ev.evaluate_named(&h, "E.Sem", &ins, 100, EvalMode::FirstMatch), Err(EvalError::IncompleteTerm));
}

fn small_e() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![Just("$r"), Just("$0"), Just("$1"), Just("$x"), Just("$y")].prop_map(String::from);
    leaf.prop_recursive(4, 24, 2, |inner| {
        (prop_oneof![Just("$+"), Just("$-")], inner.clone(), inner)
            .prop_map(|(op, a, b)| format!("({op} {a} {b})"))
    })
}

proptest! {
    #[test]
    fn fuel_monotonicity(e in small_e(), x in -20i64..20, y in -20i64..20, r in -20i64..20, extra in 0u64..50) {
        let p = parse_problem(MUL).unwrap();
        let ev = Evaluator::new(&p);
        let t = parse_term(&p, &e, "E").unwrap();
        let ins = [Value::int(x), Value::int(y), Value::int(r)];
        let mut n = 1;
        let first = loop {
            match ev.evaluate_named(&t, "E.Sem", &ins, n, EvalMode::FirstMatch).unwrap() {
                EvalOutcome::FuelExhausted(_) => n += 1,
                other => break other,
            }
        };
        let later = ev.evaluate_named(&t, "E.Sem", &ins, n + extra, EvalMode::FirstMatch).unwrap();
        prop_assert_eq!(first, later);
    }

    #[test]
    fn bitvector_results_keep_width(a in 0u64..256, b in 0u64..256) {
        let e = env(&[("a", Value::BitVec(BitVec::from_u64(8, a))), ("b", Value::BitVec(BitVec::from_u64(8, b)))]);
        for op in ["bvadd", "bvsub", "bvmul", "bvudiv", "bvurem", "bvand", "bvor", "bvxor", "bvshl", "bvlshr", "bvashr"] {
            let v = eval_formula(&formula(&format!("({op} a b)")), &e).unwrap();
            prop_assert_eq!(v.sort(), Sort::BitVec(8));
        }
        let sum = eval_formula(&formula("(bvadd a b)"), &e).unwrap();
        prop_assert_eq!(sum, Value::BitVec(BitVec::from_u64(8, (a + b) % 256)));
    }

    #[test]
    fn euclid_remainder_nonnegative(a in -1000i64..1000, d in -50i64..50) {
        prop_assume!(d != 0);
        let (q, r) = div_mod_euclid(&BigInt::from(a), &BigInt::from(d)).unwrap();
        prop_assert!(r >= BigInt::from(0) && r < BigInt::from(d.abs()));
        prop_assert_eq!(q * d + r, BigInt::from(a));
    }
}
