//! Compiling CHCs into ordered evaluation plans.
//!
//! Each CHC becomes a dataflow graph whose nodes are its body relation
//! applications and its constraint conjuncts. A relation application
//! defines its output-position variables. An equality `v = e` (either
//! orientation) defines `v` when `v` is not a head input, not produced by a
//! relation, not already defined by an earlier equality and not free in `e`.
//! Every other conjunct is a guard. Nodes are then list-scheduled: the
//! earliest (in source order) ready node runs next, and guards run as soon
//! as their variables are available.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::chc::{Chc, Premise, TermRef};
use crate::formula::{Builtin, Op, Term};
use crate::problem::{ConstructorId, RelationId, SemanticRelation, SynthesisProblem};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instruction {
    Invoke { target: TermRef, relation: String, inputs: Vec<String>, outputs: Vec<String> },
    Guard(Term),
    Compute { var: String, expr: Term },
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Invoke { target, relation, inputs, outputs } => {
                let t = match target {
                    TermRef::SelfTerm => "self".to_string(),
                    TermRef::Child(i) => format!("child {i}"),
                };
                write!(f, "invoke {relation} on {t} ({}) -> ({})", inputs.join(" "), outputs.join(" "))
            }
            Instruction::Guard(t) => write!(f, "guard {t}"),
            Instruction::Compute { var, expr } => write!(f, "{var} := {expr}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationPlan {
    pub relation: String,
    pub constructor: String,
    /// Position among the constructor's CHCs for this relation.
    pub chc_index: usize,
    /// Index into the problem's CHC list.
    pub chc: usize,
    pub instructions: Vec<Instruction>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl fmt::Display for EvaluationPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} {} #{} ({}) -> ({})",
            self.relation,
            self.constructor,
            self.chc_index,
            self.inputs.join(" "),
            self.outputs.join(" ")
        )?;
        for i in &self.instructions {
            writeln!(f, "  {i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperationalError {
    #[error("relation `{0}` has no input/output annotation")]
    MissingModes(String),
    #[error("variable `{0}` is written by more than one premise")]
    DoubleWrite(String),
    #[error("cyclic dataflow among premises {0:?}")]
    CyclicDataflow(Vec<usize>),
    #[error("input `{variable}` of {consumer} is never defined")]
    UngroundedInput { variable: String, consumer: String },
    #[error("output `{0}` is never defined")]
    UndefinedOutput(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Relation { target: TermRef, relation: String, inputs: Vec<String>, outputs: Vec<String> },
    Compute { var: String, expr: Term },
    Guard(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataflowNode {
    pub kind: NodeKind,
    pub defines: BTreeSet<String>,
    pub uses: BTreeSet<String>,
    /// Index of the premise this node came from.
    pub source: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataflowGraph {
    pub nodes: Vec<DataflowNode>,
    /// `(from, to)`: `to` uses a variable `from` defines.
    pub edges: Vec<(usize, usize)>,
    pub head_inputs: Vec<String>,
    pub head_outputs: Vec<String>,
}

fn modes_of<'r>(
    relations: &'r [SemanticRelation],
    name: &str,
) -> Result<(&'r SemanticRelation, &'r [usize], &'r [usize]), OperationalError> {
    let rel = relations
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| OperationalError::MissingModes(name.to_string()))?;
    let m = rel.modes.as_ref().ok_or_else(|| OperationalError::MissingModes(name.to_string()))?;
    Ok((rel, &m.inputs, &m.outputs))
}

pub fn build_dataflow(chc: &Chc, relations: &[SemanticRelation]) -> Result<DataflowGraph, OperationalError> {
    let (_, hin, hout) = modes_of(relations, &chc.head_relation)?;
    let head_inputs: Vec<String> = hin.iter().map(|&i| chc.head_args[i].clone()).collect();
    let head_outputs: Vec<String> = hout.iter().map(|&i| chc.head_args[i].clone()).collect();

    let mut relation_defined: BTreeSet<String> = BTreeSet::new();
    let mut nodes: Vec<Option<DataflowNode>> = vec![None; chc.premises.len()];
    for (k, p) in chc.premises.iter().enumerate() {
        if let Premise::Relation(app) = p {
            let (_, ins, outs) = modes_of(relations, &app.relation)?;
            let inputs: Vec<String> = ins.iter().map(|&i| app.args[i].clone()).collect();
            let outputs: Vec<String> = outs.iter().map(|&i| app.args[i].clone()).collect();
            for o in &outputs {
                if head_inputs.contains(o) || !relation_defined.insert(o.clone()) {
                    return Err(OperationalError::DoubleWrite(o.clone()));
                }
            }
            nodes[k] = Some(DataflowNode {
                defines: outputs.iter().cloned().collect(),
                uses: inputs.iter().cloned().collect(),
                kind: NodeKind::Relation { target: app.term, relation: app.relation.clone(), inputs, outputs },
                source: k,
            });
        }
    }
    let mut claimed = relation_defined.clone();
    for (k, p) in chc.premises.iter().enumerate() {
        let Premise::Constraint(t) = p else { continue };
        let compute = match t {
            Term::App(Op::Builtin(Builtin::Eq), args) if args.len() == 2 => {
                [(&args[0], &args[1]), (&args[1], &args[0])].into_iter().find_map(|(l, r)| match l {
                    Term::Var(v)
                        if !head_inputs.contains(v)
                            && !claimed.contains(v)
                            && !r.free_vars().contains(v) =>
                    {
                        Some((v.clone(), r.clone()))
                    }
                    _ => None,
                })
            }
            _ => None,
        };
        nodes[k] = Some(match compute {
            Some((var, expr)) => {
                claimed.insert(var.clone());
                DataflowNode {
                    defines: BTreeSet::from([var.clone()]),
                    uses: expr.free_vars(),
                    kind: NodeKind::Compute { var, expr },
                    source: k,
                }
            }
            None => DataflowNode {
                defines: BTreeSet::new(),
                uses: t.free_vars(),
                kind: NodeKind::Guard(t.clone()),
                source: k,
            },
        });
    }
    let nodes: Vec<DataflowNode> = nodes.into_iter().map(Option::unwrap).collect();
    let mut edges = Vec::new();
    for (i, a) in nodes.iter().enumerate() {
        for (j, b) in nodes.iter().enumerate() {
            if i != j && a.defines.iter().any(|v| b.uses.contains(v)) {
                edges.push((i, j));
            }
        }
    }
    Ok(DataflowGraph { nodes, edges, head_inputs, head_outputs })
}

pub fn order_chc(
    graph: &DataflowGraph,
    chc: &Chc,
    chc_index: usize,
    chc_position: usize,
) -> Result<EvaluationPlan, OperationalError> {
    let mut defined: BTreeSet<String> = graph.head_inputs.iter().cloned().collect();
    let mut done = vec![false; graph.nodes.len()];
    let mut instructions = Vec::new();
    let ready = |n: &DataflowNode, defined: &BTreeSet<String>| n.uses.iter().all(|u| defined.contains(u));
    loop {
        // guards go first, as soon as they can be checked
        for (i, n) in graph.nodes.iter().enumerate() {
            if !done[i] && matches!(n.kind, NodeKind::Guard(_)) && ready(n, &defined) {
                done[i] = true;
                if let NodeKind::Guard(t) = &n.kind {
                    instructions.push(Instruction::Guard(t.clone()));
                }
            }
        }
        let next = graph
            .nodes
            .iter()
            .enumerate()
            .find(|(i, n)| !done[*i] && !matches!(n.kind, NodeKind::Guard(_)) && ready(n, &defined));
        let Some((i, n)) = next else { break };
        done[i] = true;
        defined.extend(n.defines.iter().cloned());
        instructions.push(match &n.kind {
            NodeKind::Relation { target, relation, inputs, outputs } => Instruction::Invoke {
                target: *target,
                relation: relation.clone(),
                inputs: inputs.clone(),
                outputs: outputs.clone(),
            },
            NodeKind::Compute { var, expr } => Instruction::Compute { var: var.clone(), expr: expr.clone() },
            NodeKind::Guard(_) => unreachable!(),
        });
    }
    let pending: Vec<usize> = (0..graph.nodes.len()).filter(|&i| !done[i]).collect();
    if !pending.is_empty() {
        let definable: BTreeSet<&String> =
            pending.iter().flat_map(|&i| graph.nodes[i].defines.iter()).collect();
        for &i in &pending {
            let n = &graph.nodes[i];
            if let Some(v) = n.uses.iter().find(|u| !defined.contains(*u) && !definable.contains(u)) {
                let consumer = match &n.kind {
                    NodeKind::Relation { relation, .. } => relation.clone(),
                    NodeKind::Compute { var, .. } => format!("the definition of `{var}`"),
                    NodeKind::Guard(t) => format!("guard {t}"),
                };
                return Err(OperationalError::UngroundedInput { variable: v.clone(), consumer });
            }
        }
        return Err(OperationalError::CyclicDataflow(
            pending.iter().map(|&i| graph.nodes[i].source).collect(),
        ));
    }
    if let Some(o) = graph.head_outputs.iter().find(|o| !defined.contains(*o)) {
        return Err(OperationalError::UndefinedOutput(o.clone()));
    }
    Ok(EvaluationPlan {
        relation: chc.head_relation.clone(),
        constructor: chc.constructor.clone(),
        chc_index,
        chc: chc_position,
        instructions,
        inputs: graph.head_inputs.clone(),
        outputs: graph.head_outputs.clone(),
    })
}

/// Plans keyed by (relation, constructor), alternatives in declaration
/// order, plus the CHCs that could not be operationalized.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlanTable {
    pub plans: IndexMap<(RelationId, ConstructorId), Vec<EvaluationPlan>>,
    /// `(chc index, error)`.
    pub errors: Vec<(usize, OperationalError)>,
}

impl PlanTable {
    pub fn get(&self, relation: RelationId, ctor: ConstructorId) -> &[EvaluationPlan] {
        self.plans.get(&(relation, ctor)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_complete(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn operationalize_chc(
    chc: &Chc,
    relations: &[SemanticRelation],
    chc_index: usize,
    chc_position: usize,
) -> Result<EvaluationPlan, OperationalError> {
    let graph = build_dataflow(chc, relations)?;
    order_chc(&graph, chc, chc_index, chc_position)
}

pub fn operationalize_all(problem: &SynthesisProblem) -> PlanTable {
    let mut table = PlanTable::default();
    let mut failed: BTreeSet<(RelationId, ConstructorId)> = BTreeSet::new();
    for (k, chc) in problem.chcs().iter().enumerate() {
        let key = (
            problem.relation_id(&chc.head_relation).unwrap(),
            problem.constructor_id(&chc.constructor).unwrap(),
        );
        let ordinal = problem.chcs_for(key.0, key.1).iter().position(|&c| c == k).unwrap();
        match operationalize_chc(chc, problem.relations(), ordinal, k) {
            Ok(plan) => table.plans.entry(key).or_default().push(plan),
            Err(e) => {
                failed.insert(key);
                table.errors.push((k, e));
            }
        }
    }
    // a constructor with a missing alternative cannot be executed faithfully
    for key in failed {
        table.plans.shift_remove(&key);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::parse_problem;

    const MUL: &str = include_str!("../../../benchmarks/semgus/imp-mul.sem");

    fn plan_for(text: &str, rel: &str, ctor: &str) -> Vec<EvaluationPlan> {
        let p = parse_problem(text).unwrap();
        let t = operationalize_all(&p);
        assert!(t.is_complete(), "{:?}", t.errors);
        t.get(p.relation_id(rel).unwrap(), p.constructor_id(ctor).unwrap()).to_vec()
    }

    fn shape(plan: &EvaluationPlan) -> Vec<String> {
        plan.instructions
            .iter()
            .map(|i| match i {
                Instruction::Invoke { target, relation, .. } => format!("invoke {relation} {target:?}"),
                Instruction::Guard(t) => format!("guard {t}"),
                Instruction::Compute { var, expr } => format!("{var} := {expr}"),
            })
            .collect()
    }

    #[test]
    fn while_true_order() {
        let plans = plan_for(MUL, "S.Sem", "$while");
        assert_eq!(plans.len(), 2);
        assert_eq!(
            shape(&plans[0]),
            [
                "invoke B.Sem Child(0)",
                "guard (= b true)",
                "invoke S.Sem Child(1)",
                "invoke S.Sem SelfTerm"
            ]
        );
        assert_eq!(
            shape(&plans[1]),
            ["invoke B.Sem Child(0)", "guard (= b false)", "xo := xi", "yo := yi", "ro := ri"]
        );
    }

    #[test]
    fn noop_is_three_computes() {
        let p = parse_problem(MUL).unwrap();
        let chc = p.chcs().iter().find(|c| c.constructor == "$noop").unwrap();
        let g = build_dataflow(chc, p.relations()).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert!(g.nodes.iter().all(|n| matches!(n.kind, NodeKind::Compute { .. })));
        let plan = &plan_for(MUL, "S.Sem", "$noop")[0];
        assert_eq!(shape(plan), ["xo := xi", "yo := yi", "ro := ri"]);
    }

    #[test]
    fn constant_leaf() {
        assert_eq!(shape(&plan_for(MUL, "E.Sem", "$0")[0]), ["out := 0"]);
    }

    #[test]
    fn function_computes_literal_argument_first() {
        let plan = &plan_for(MUL, "F.Sem", "$function")[0];
        assert_eq!(shape(plan), ["_a0 := 0", "invoke S.Sem Child(0)", "invoke E.Sem Child(1)"]);
    }

    #[test]
    fn double_write() {
        let text = MUL.replace(
            "(and (E.Sem t1 xi yi ri v1) (E.Sem t2 xi yi ri v2) (= out (+ v1 v2)))",
            "(and (E.Sem t1 xi yi ri v1) (E.Sem t2 xi yi ri v1) (= out (+ v1 v2)))",
        );
        let p = parse_problem(&text).unwrap();
        let t = operationalize_all(&p);
        assert_eq!(t.errors.len(), 1);
        assert_eq!(t.errors[0].1, OperationalError::DoubleWrite("v1".into()));
        assert!(t.get(p.relation_id("E.Sem").unwrap(), p.constructor_id("$+").unwrap()).is_empty());
        assert_eq!(t.get(p.relation_id("E.Sem").unwrap(), p.constructor_id("$-").unwrap()).len(), 1);
    }

    #[test]
    fn ungrounded_after_deleting_body_call() {
        let text = MUL.replace(
            "(S.Sem ts xi yi ri x1 y1 r1)\n              (S.Sem t x1 y1 r1 xo yo ro)",
            "(S.Sem t x1 y1 r1 xo yo ro)",
        );
        let p = parse_problem(&text).unwrap();
        let t = operationalize_all(&p);
        assert_eq!(t.errors.len(), 1);
        assert!(matches!(
            &t.errors[0].1,
            OperationalError::UngroundedInput { variable, consumer }
                if ["x1", "y1", "r1"].contains(&variable.as_str()) && consumer == "S.Sem"
        ));
    }

    #[test]
    fn nondeterministic_output() {
        let text = MUL.replace("(($1) (= out 1))", "(($1) (> out 0))");
        let p = parse_problem(&text).unwrap();
        let t = operationalize_all(&p);
        assert_eq!(t.errors.len(), 1);
        assert!(matches!(t.errors[0].1, OperationalError::UngroundedInput { .. }));
    }

    #[test]
    fn cycle_detected() {
        let text = "(declare-term-types ((E 0)) ((($c))))
            (define-funs-rec ((E.Sem ((t E) (x Int) (o Int)) Bool))
              ((! (match t ((($c) (exists ((a Int) (b Int)) (and (= a (+ b 1)) (= b (+ a 1)) (= o a))))))
                  :input (x) :output (o))))
            (synth-fun f () E) (check-synth)";
        let p = parse_problem(text).unwrap();
        let t = operationalize_all(&p);
        assert!(matches!(t.errors[0].1, OperationalError::CyclicDataflow(_)), "{:?}", t.errors);
    }

    #[test]
    fn plans_are_valid_and_deterministic() {
        let p = parse_problem(MUL).unwrap();
        let a = operationalize_all(&p);
        assert_eq!(a, operationalize_all(&p));
        for plans in a.plans.values() {
            for plan in plans {
                let mut defined: BTreeSet<String> = plan.inputs.iter().cloned().collect();
                for i in &plan.instructions {
                    let (uses, defs) = match i {
                        Instruction::Invoke { inputs, outputs, .. } => (inputs.iter().cloned().collect(), outputs.clone()),
                        Instruction::Guard(t) => (t.free_vars(), vec![]),
                        Instruction::Compute { var, expr } => (expr.free_vars(), vec![var.clone()]),
                    };
                    assert!(uses.iter().all(|u: &String| defined.contains(u)), "{plan}");
                    for d in defs {
                        assert!(defined.insert(d), "{plan}");
                    }
                }
                assert!(plan.outputs.iter().all(|o| defined.contains(o)));
            }
        }
    }
}
