//! Running a plan with arbitrary child results must produce a binding
//! under which every constraint conjunct of its CHC holds.

use std::fs;
use std::path::PathBuf;

use num_bigint::BigInt;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use semgus::chc::Premise;
use semgus::eval::{eval_formula, Binding, Value};
use semgus::formula::{BitVec, Sort};
use semgus::operational::{operationalize_all, Instruction};
use semgus::problem::{parse_problem, SynthesisProblem};
use semgus::sygus::{parse_sygus, sygus_to_semgus};

const TRIALS: usize = 1000;

fn random_value(rng: &mut StdRng, sort: &Sort) -> Value {
    match sort {
        Sort::Int => Value::Int(BigInt::from(rng.gen_range(-50i64..=50))),
        Sort::Bool => Value::Bool(rng.gen()),
        Sort::BitVec(w) => {
            let mask = if *w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
            Value::BitVec(BitVec::from_u64(*w, rng.gen::<u64>() & mask))
        }
        Sort::String => {
            let n = rng.gen_range(0..4);
            Value::Str((0..n).map(|_| ['a', 'b', '(', ')'][rng.gen_range(0..4)]).collect())
        }
        Sort::Term(t) => panic!("no random values of term type {t}"),
    }
}

fn corpus() -> Vec<(String, SynthesisProblem)> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks");
    let mut out = Vec::new();
    for sub in ["semgus", "sygus"] {
        let mut files: Vec<PathBuf> = fs::read_dir(root.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        for f in files {
            let text = fs::read_to_string(&f).unwrap();
            let p = if sub == "sygus" {
                sygus_to_semgus(&parse_sygus(&text).unwrap()).unwrap()
            } else {
                parse_problem(&text).unwrap()
            };
            out.push((f.display().to_string(), p));
        }
    }
    out
}

#[test]
fn plans_satisfy_their_chcs() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut checked = 0;
    for (path, problem) in corpus() {
        let table = operationalize_all(&problem);
        assert!(table.errors.is_empty(), "{path}: {:?}", table.errors);
        for plan in table.plans.values().flatten() {
            let chc = &problem.chcs()[plan.chc];
            let head = problem.relation(&chc.head_relation).unwrap();
            let modes = head.modes.as_ref().unwrap();
            let (mut completed, mut attempts) = (0, 0);
            while completed < TRIALS {
                attempts += 1;
                assert!(attempts < 50 * TRIALS, "{path}: plan for `{}` rarely runs to completion", chc.constructor);
                let mut env = Binding::new();
                for &i in &modes.inputs {
                    env.insert(chc.head_args[i].clone(), random_value(&mut rng, &head.params[i].1));
                }
                let mut ok = true;
                for ins in &plan.instructions {
                    match ins {
                        Instruction::Invoke { relation, outputs, .. } => {
                            let r = problem.relation(relation).unwrap();
                            let outs = &r.modes.as_ref().unwrap().outputs;
                            for (v, &pos) in outputs.iter().zip(outs) {
                                env.insert(v.clone(), random_value(&mut rng, &r.params[pos].1));
                            }
                        }
                        Instruction::Compute { var, expr } => match eval_formula(expr, &env) {
                            Ok(v) => {
                                env.insert(var.clone(), v);
                            }
                            Err(_) => {
                                ok = false;
                                break;
                            }
                        },
                        Instruction::Guard(g) => {
                            if eval_formula(g, &env) != Ok(Value::Bool(true)) {
                                ok = false;
                                break;
                            }
                        }
                    }
                }
                if !ok {
                    continue;
                }
                for &i in &modes.outputs {
                    assert!(env.contains_key(&chc.head_args[i]), "{path}: output {} unset", chc.head_args[i]);
                }
                for p in &chc.premises {
                    if let Premise::Constraint(c) = p {
                        assert_eq!(
                            eval_formula(c, &env),
                            Ok(Value::Bool(true)),
                            "{path}: `{c}` fails for `{}` under {env:?}",
                            chc.constructor
                        );
                    }
                }
                completed += 1;
            }
            checked += 1;
        }
    }
    assert!(checked > 50, "only {checked} CHCs checked");
}
