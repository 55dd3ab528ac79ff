//! Plan execution.
//!
//! Plans are compiled to flat instruction arrays over numbered slots. The
//! interpreter keeps an explicit frame stack, so deep recursion (long
//! loops) only costs fuel, not native stack. A term invoking itself on
//! the inputs it is already running on can never finish, and is reported
//! as out of fuel at once.

use std::collections::HashMap;

use thiserror::Error;

use crate::chc::TermRef;
use crate::formula::{Builtin, Op, Term};
use crate::operational::{operationalize_all, EvaluationPlan, Instruction, PlanTable};
use crate::problem::{ConstructorId, RelationId, SynthesisProblem};
use crate::program::{Node, ProgramTerm};

use super::{apply_lazy, eval_formula, Binding, FormulaError, Value};

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Run the first alternative whose guards all pass.
    #[default]
    FirstMatch,
    /// Run every alternative and report more than one success.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalOutcome {
    Ok(Vec<Value>),
    FuelExhausted(u64),
    GuardFailure,
    /// CHC indices of the alternatives that all succeeded.
    NondetAmbiguity(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no executable semantics for `{constructor}` under `{relation}`")]
    MissingPlan { relation: String, constructor: String },
    #[error("cannot evaluate a term with holes")]
    IncompleteTerm,
    #[error("`{relation}` expects {expected} inputs, got {got}")]
    InputArity { relation: String, expected: usize, got: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Debug, Clone)]
enum CExpr {
    Slot(u32),
    Const(Value),
    App(Builtin, Vec<CExpr>),
}

impl CExpr {
    fn compile(t: &Term, slots: &HashMap<String, u32>) -> CExpr {
        match t {
            Term::Var(v) => CExpr::Slot(slots[v]),
            Term::Lit(l) => CExpr::Const(Value::from_literal(l)),
            Term::App(Op::Builtin(b), args) => {
                CExpr::App(*b, args.iter().map(|a| CExpr::compile(a, slots)).collect())
            }
            Term::App(Op::Relation(_), _) | Term::Quant(..) => {
                unreachable!("plans never contain relations or quantifiers in formulas")
            }
        }
    }

    fn eval(&self, slots: &[Value]) -> Result<Value, FormulaError> {
        match self {
            CExpr::Slot(s) => Ok(slots[*s as usize].clone()),
            CExpr::Const(v) => Ok(v.clone()),
            CExpr::App(b, args) => apply_lazy(*b, args.len(), &mut |i| args[i].eval(slots)),
        }
    }
}

#[derive(Debug, Clone)]
enum CInstr {
    Invoke { child: Option<usize>, relation: usize, inputs: Vec<u32>, outputs: Vec<u32> },
    Guard(CExpr),
    Compute(u32, CExpr),
}

#[derive(Debug, Clone)]
struct CPlan {
    chc: usize,
    slots: usize,
    inputs: Vec<u32>,
    outputs: Vec<u32>,
    instrs: Vec<CInstr>,
}

impl CPlan {
    fn compile(plan: &EvaluationPlan, problem: &SynthesisProblem) -> CPlan {
        let mut slots: HashMap<String, u32> = HashMap::new();
        let slot = |v: &str, slots: &mut HashMap<String, u32>| {
            let n = slots.len() as u32;
            *slots.entry(v.to_string()).or_insert(n)
        };
        let inputs: Vec<u32> = plan.inputs.iter().map(|v| slot(v, &mut slots)).collect();
        let mut instrs = Vec::with_capacity(plan.instructions.len());
        for i in &plan.instructions {
            instrs.push(match i {
                Instruction::Invoke { target, relation, inputs, outputs } => CInstr::Invoke {
                    child: match target {
                        TermRef::SelfTerm => None,
                        TermRef::Child(c) => Some(*c),
                    },
                    relation: problem.relation_id(relation).unwrap().0 as usize,
                    inputs: inputs.iter().map(|v| slots[v]).collect(),
                    outputs: outputs.iter().map(|v| slot(v, &mut slots)).collect(),
                },
                Instruction::Guard(t) => CInstr::Guard(CExpr::compile(t, &slots)),
                Instruction::Compute { var, expr } => {
                    let e = CExpr::compile(expr, &slots);
                    CInstr::Compute(slot(var, &mut slots), e)
                }
            });
        }
        let outputs = plan.outputs.iter().map(|v| slot(v, &mut slots)).collect();
        CPlan { chc: plan.chc, slots: slots.len(), inputs, outputs, instrs }
    }
}

/// Executes program terms against a problem's operationalized semantics.
/// Immutable once built; evaluations may run concurrently.
#[derive(Debug, Clone)]
pub struct Evaluator<'p> {
    problem: &'p SynthesisProblem,
    table: PlanTable,
    ctors: usize,
    // indexed by relation * ctors + constructor
    compiled: Vec<Vec<CPlan>>,
}

struct Frame<'t> {
    /// The term this frame runs on, reused by `self` invocations.
    node: &'t Node,
    plans: &'t [CPlan],
    alt: usize,
    pc: usize,
    inputs: Vec<Value>,
    slots: Vec<Value>,
    successes: Vec<(usize, Vec<Value>)>,
}

enum Step {
    Continue,
    Done(Vec<Value>),
    AltFailed,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p SynthesisProblem) -> Self {
        Self::with_plans(problem, operationalize_all(problem))
    }

    pub fn with_plans(problem: &'p SynthesisProblem, table: PlanTable) -> Self {
        let ctors = problem.constructor_count();
        let mut compiled = vec![Vec::new(); problem.relations().len() * ctors];
        for ((r, c), plans) in &table.plans {
            compiled[r.0 as usize * ctors + c.0 as usize] =
                plans.iter().map(|p| CPlan::compile(p, problem)).collect();
        }
        Evaluator { problem, table, ctors, compiled }
    }

    pub fn problem(&self) -> &'p SynthesisProblem {
        self.problem
    }

    pub fn plans(&self) -> &PlanTable {
        &self.table
    }

    fn plans_for(&self, relation: usize, ctor: ConstructorId) -> Result<&[CPlan], EvalError> {
        let plans = &self.compiled[relation * self.ctors + ctor.0 as usize];
        if plans.is_empty() {
            return Err(EvalError::MissingPlan {
                relation: self.problem.relation_by_id(RelationId(relation as u32)).name.clone(),
                constructor: self.problem.constructor(ctor).operator.clone(),
            });
        }
        Ok(plans)
    }

    fn frame<'t>(
        &'t self,
        term: &'t ProgramTerm,
        relation: usize,
        inputs: Vec<Value>,
    ) -> Result<Frame<'t>, EvalError> {
        let ProgramTerm::Node(node) = term else {
            return Err(EvalError::IncompleteTerm);
        };
        let plans = self.plans_for(relation, node.ctor)?;
        let mut f = Frame {
            node,
            plans,
            alt: 0,
            pc: 0,
            inputs,
            slots: Vec::new(),
            successes: Vec::new(),
        };
        f.reset();
        Ok(f)
    }

    /// Runs `term` under `relation` on the values of its input positions
    /// (in position order). `Ok` carries the output positions in order.
    pub fn evaluate(
        &self,
        term: &ProgramTerm,
        relation: RelationId,
        inputs: &[Value],
        fuel: u64,
        mode: EvalMode,
    ) -> Result<EvalOutcome, EvalError> {
        let rel = self.problem.relation_by_id(relation);
        let expected = rel.input_positions().map_or(0, <[usize]>::len);
        if inputs.len() != expected || rel.modes.is_none() {
            return Err(EvalError::InputArity {
                relation: rel.name.clone(),
                expected,
                got: inputs.len(),
            });
        }
        let mut remaining = fuel;
        let mut stack: Vec<Frame<'_>> = vec![self.frame(term, relation.0 as usize, inputs.to_vec())?];
        loop {
            let top = stack.last_mut().unwrap();
            let plans = top.plans;
            let step = if top.pc < plans[top.alt].instrs.len() {
                if remaining == 0 {
                    return Ok(EvalOutcome::FuelExhausted(fuel));
                }
                remaining -= 1;
                let plan = &plans[top.alt];
                match &plan.instrs[top.pc] {
                    CInstr::Guard(e) => {
                        if e.eval(&top.slots)?.as_bool() == Some(true) {
                            top.pc += 1;
                            Step::Continue
                        } else {
                            Step::AltFailed
                        }
                    }
                    CInstr::Compute(s, e) => {
                        top.slots[*s as usize] = e.eval(&top.slots)?;
                        top.pc += 1;
                        Step::Continue
                    }
                    CInstr::Invoke { child, relation, inputs, .. } => {
                        let args: Vec<Value> = inputs.iter().map(|&s| top.slots[s as usize].clone()).collect();
                        let node: &Node = top.node;
                        let callee = match child {
                            Some(c) => self.frame(&node.children[*c], *relation, args)?,
                            None => {
                                let plans = self.plans_for(*relation, node.ctor)?;
                                // same term, relation and inputs: evaluation is
                                // deterministic, so this repeats forever
                                if std::ptr::eq(plans, top.plans) && args == top.inputs {
                                    return Ok(EvalOutcome::FuelExhausted(fuel));
                                }
                                let mut f = Frame {
                                    node,
                                    plans,
                                    alt: 0,
                                    pc: 0,
                                    inputs: args,
                                    slots: Vec::new(),
                                    successes: Vec::new(),
                                };
                                f.reset();
                                f
                            }
                        };
                        stack.push(callee);
                        continue;
                    }
                }
            } else {
                let plan = &plans[top.alt];
                let out: Vec<Value> = plan.outputs.iter().map(|&s| top.slots[s as usize].clone()).collect();
                match mode {
                    EvalMode::FirstMatch => Step::Done(out),
                    EvalMode::Strict => {
                        top.successes.push((plan.chc, out));
                        Step::AltFailed
                    }
                }
            };
            // resolve completed or failed alternatives, unwinding as needed
            let mut step = step;
            loop {
                match step {
                    Step::Continue => break,
                    Step::AltFailed => {
                        let top = stack.last_mut().unwrap();
                        top.alt += 1;
                        if top.alt < top.plans.len() {
                            top.reset();
                            break;
                        }
                        let mut successes = std::mem::take(&mut top.successes);
                        match successes.len() {
                            0 => {
                                stack.pop();
                                if stack.is_empty() {
                                    return Ok(EvalOutcome::GuardFailure);
                                }
                                step = Step::AltFailed;
                            }
                            1 => step = Step::Done(successes.pop().unwrap().1),
                            _ => {
                                return Ok(EvalOutcome::NondetAmbiguity(
                                    successes.into_iter().map(|(c, _)| c).collect(),
                                ))
                            }
                        }
                    }
                    Step::Done(out) => {
                        stack.pop();
                        let Some(parent) = stack.last_mut() else {
                            return Ok(EvalOutcome::Ok(out));
                        };
                        let CInstr::Invoke { outputs, .. } = &parent.plans[parent.alt].instrs[parent.pc] else {
                            unreachable!("a callee returns into an invoke");
                        };
                        for (&s, v) in outputs.iter().zip(out) {
                            parent.slots[s as usize] = v;
                        }
                        parent.pc += 1;
                        break;
                    }
                }
            }
        }
    }

    /// Convenience wrapper taking a relation name.
    pub fn evaluate_named(
        &self,
        term: &ProgramTerm,
        relation: &str,
        inputs: &[Value],
        fuel: u64,
        mode: EvalMode,
    ) -> Result<EvalOutcome, EvalError> {
        let id = self.problem.relation_id(relation).ok_or_else(|| EvalError::InputArity {
            relation: relation.to_string(),
            expected: 0,
            got: inputs.len(),
        })?;
        self.evaluate(term, id, inputs, fuel, mode)
    }
}

impl Frame<'_> {
    fn reset(&mut self) {
        let plan = &self.plans[self.alt];
        self.pc = 0;
        self.slots.clear();
        self.slots.resize(plan.slots, Value::Bool(false));
        for (&s, v) in plan.inputs.iter().zip(&self.inputs) {
            self.slots[s as usize] = v.clone();
        }
    }
}

/// A ground example constraint `(R target v1 .. vn)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub relation: RelationId,
    pub inputs: Vec<Value>,
    pub outputs: Vec<Value>,
    /// Index of the originating constraint.
    pub constraint: usize,
}

/// Splits the constraints into ground examples and the rest (indices).
pub fn extract_examples(problem: &SynthesisProblem) -> (Vec<Example>, Vec<usize>) {
    let target = &problem.target().name;
    let mut examples = Vec::new();
    let mut rest = Vec::new();
    for (k, c) in problem.constraints().iter().enumerate() {
        match example_of(problem, c, target) {
            Some(mut e) => {
                e.constraint = k;
                examples.push(e);
            }
            None => rest.push(k),
        }
    }
    (examples, rest)
}

fn example_of(problem: &SynthesisProblem, c: &Term, target: &str) -> Option<Example> {
    let Term::App(Op::Relation(r), args) = c else { return None };
    let id = problem.relation_id(r)?;
    let rel = problem.relation(r)?;
    let modes = rel.modes.as_ref()?;
    if args.get(rel.term_index) != Some(&Term::Var(target.to_string())) {
        return None;
    }
    // closed arguments such as `(- 2)` count as literals
    let lit = |i: &usize| match &args[*i] {
        Term::Lit(l) => Some(Value::from_literal(l)),
        a if a.free_vars().is_empty() && !a.mentions_relation() && !a.has_quantifier() => {
            eval_formula(a, &Binding::new()).ok()
        }
        _ => None,
    };
    Some(Example {
        relation: id,
        inputs: modes.inputs.iter().map(lit).collect::<Option<_>>()?,
        outputs: modes.outputs.iter().map(lit).collect::<Option<_>>()?,
        constraint: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExampleResult {
    Pass,
    /// First failing example, with what the term produced instead.
    Fail { index: usize, got: Result<EvalOutcome, EvalError> },
}

impl ExampleResult {
    pub fn passed(&self) -> bool {
        matches!(self, ExampleResult::Pass)
    }
}

pub fn run_examples(
    evaluator: &Evaluator<'_>,
    term: &ProgramTerm,
    examples: &[Example],
    fuel: u64,
    mode: EvalMode,
) -> ExampleResult {
    for (index, ex) in examples.iter().enumerate() {
        let got = evaluator.evaluate(term, ex.relation, &ex.inputs, fuel, mode);
        match &got {
            Ok(EvalOutcome::Ok(out)) if *out == ex.outputs => {}
            _ => return ExampleResult::Fail { index, got },
        }
    }
    ExampleResult::Pass
}
