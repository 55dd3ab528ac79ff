//! Logical verification of candidates through an external SMT solver, an
//! evaluator-backed checker for concrete instances of the constraints,
//! and the CEGIS loop that ties them to enumeration.

mod cegis;
mod smt;
mod solver;

use std::collections::BTreeSet;

pub use cegis::cegis;
pub use smt::{emit_smt_script, EmitError, SmtFunction, SmtScript, SpecShape, UniversalConstraint};
pub use solver::{parse_model, run_solver, SatResult, SolverConfig, SolverError, SOLVER_ENV};

use crate::eval::{eval_formula, Binding, EvalMode, EvalOutcome, Evaluator, Value};
use crate::formula::{Builtin, Op, Quantifier, Sort, Term};
use crate::program::ProgramTerm;
use crate::problem::SynthesisProblem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InconclusiveReason {
    SolverUnknown(String),
    Timeout,
    Unsupported(String),
}

impl std::fmt::Display for InconclusiveReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InconclusiveReason::SolverUnknown(r) => write!(f, "solver gave up: {r}"),
            InconclusiveReason::Timeout => write!(f, "solver timed out"),
            InconclusiveReason::Unsupported(r) => write!(f, "unsupported: {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerificationResult {
    Verified,
    /// Values of the universal variables (keyed by their constants) that
    /// violate the constraints. Empty when a ground constraint fails.
    Refuted(Binding),
    Inconclusive(InconclusiveReason),
}

/// Checks `term` against every constraint of the problem: ground
/// constraints must be satisfiable with the candidate fixed, and the
/// negation of the universal ones must be unsatisfiable.
pub fn verify_logical(
    term: &ProgramTerm,
    problem: &SynthesisProblem,
    config: &SolverConfig,
) -> Result<VerificationResult, SolverError> {
    let script = match emit_smt_script(term, problem) {
        Ok(s) => s,
        Err(e) => return Ok(VerificationResult::Inconclusive(InconclusiveReason::Unsupported(e.to_string()))),
    };
    let undecided = |r: SatResult| match r {
        SatResult::Unknown(why) => VerificationResult::Inconclusive(InconclusiveReason::SolverUnknown(why)),
        _ => VerificationResult::Inconclusive(InconclusiveReason::Timeout),
    };
    if let Some(q) = script.ground_query() {
        match run_solver(config, &q)? {
            SatResult::Sat(_) => {}
            SatResult::Unsat => return Ok(VerificationResult::Refuted(Binding::new())),
            r => return Ok(undecided(r)),
        }
    }
    if let Some(q) = script.universal_query() {
        return Ok(match run_solver(config, &q)? {
            SatResult::Unsat => VerificationResult::Verified,
            SatResult::Sat(model) => VerificationResult::Refuted(parse_model(&model, &script.constants)?),
            r => undecided(r),
        });
    }
    Ok(VerificationResult::Verified)
}

/// Outcome of checking one concrete instance by evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Pass,
    Fail,
    /// The instance is outside what evaluation can decide.
    Unknown,
}

impl Check {
    fn of(b: Option<bool>) -> Check {
        match b {
            Some(true) => Check::Pass,
            Some(false) => Check::Fail,
            None => Check::Unknown,
        }
    }

    pub fn and(self, other: Check) -> Check {
        match (self, other) {
            (Check::Fail, _) | (_, Check::Fail) => Check::Fail,
            (Check::Pass, Check::Pass) => Check::Pass,
            _ => Check::Unknown,
        }
    }
}

/// Decides constraint instances by running the candidate.
///
/// An application of a relation to the target is computed by evaluating
/// the candidate on its input arguments. A universal variable in an
/// output position that the instance leaves unbound takes the computed
/// value, so `(=> (R f x r) (p r))` checks `p` on `f`'s actual output.
pub struct SpecChecker<'e, 'p> {
    evaluator: &'e Evaluator<'p>,
    shape: SpecShape,
    fuel: u64,
    mode: EvalMode,
}

impl<'e, 'p> SpecChecker<'e, 'p> {
    pub fn new(evaluator: &'e Evaluator<'p>, fuel: u64, mode: EvalMode) -> Self {
        SpecChecker { evaluator, shape: SpecShape::of(evaluator.problem()), fuel, mode }
    }

    pub fn shape(&self) -> &SpecShape {
        &self.shape
    }

    /// Checks the ground constraint `constraint` (an index into the
    /// problem's constraints).
    pub fn check_ground(&self, term: &ProgramTerm, constraint: usize) -> Check {
        let c = &self.evaluator.problem().constraints()[constraint];
        Check::of(self.decide(term, c, Binding::new(), &BTreeSet::new()))
    }

    /// Checks every universal constraint at a counterexample.
    pub fn check_counterexample(&self, term: &ProgramTerm, cex: &Binding) -> Check {
        let mut acc = Check::Pass;
        for u in &self.shape.universal {
            let env: Binding =
                u.vars.iter().filter_map(|(c, v, _)| Some((v.clone(), cex.get(c)?.clone()))).collect();
            let mut outputs = BTreeSet::new();
            self.output_vars(&u.body, &mut outputs);
            outputs.retain(|v| u.vars.iter().any(|(_, w, _)| w == v));
            let inputs_only: Binding = env.iter().filter(|(v, _)| !outputs.contains(*v)).map(|(v, x)| (v.clone(), x.clone())).collect();
            let r = self
                .decide(term, &u.body, inputs_only, &outputs)
                .or_else(|| self.decide(term, &u.body, env, &BTreeSet::new()));
            acc = acc.and(Check::of(r));
        }
        acc
    }

    fn output_vars(&self, t: &Term, out: &mut BTreeSet<String>) {
        match t {
            Term::App(Op::Relation(r), args) => {
                if let Some(outs) = self.evaluator.problem().relation(r).and_then(|r| r.output_positions()) {
                    for &i in outs {
                        if let Some(Term::Var(v)) = args.get(i) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| self.output_vars(a, out)),
            _ => {}
        }
    }

    fn decide(&self, term: &ProgramTerm, f: &Term, mut env: Binding, bindable: &BTreeSet<String>) -> Option<bool> {
        let resolved = self.resolve(term, f, &mut env, bindable)?;
        eval_formula(&resolved, &env).ok()?.as_bool()
    }

    /// `(exists (o..) (and φ (R f x o)..))` where each `o` is the output of
    /// an application to the target: runs the applications to fix the
    /// `o`s, then decides the rest.
    fn resolve_exists(
        &self,
        term: &ProgramTerm,
        vars: &[(String, Sort)],
        body: &Term,
        env: &mut Binding,
        bindable: &BTreeSet<String>,
    ) -> Option<Term> {
        let Term::App(Op::Builtin(Builtin::And), conj) = body else { return None };
        let mut inner = env.clone();
        let mut bind = bindable.clone();
        for (v, _) in vars {
            inner.shift_remove(v);
            bind.insert(v.clone());
        }
        let (apps, rest): (Vec<&Term>, Vec<&Term>) =
            conj.iter().partition(|c| matches!(c, Term::App(Op::Relation(_), _)));
        let mut parts = Vec::new();
        for c in apps.into_iter().chain(rest) {
            parts.push(self.resolve(term, c, &mut inner, &bind)?);
        }
        if vars.iter().any(|(v, _)| !inner.contains_key(v)) {
            return None;
        }
        let holds = eval_formula(&Term::App(Op::Builtin(Builtin::And), parts), &inner).ok()?.as_bool()?;
        Some(Term::bool(holds))
    }

    fn resolve(&self, term: &ProgramTerm, t: &Term, env: &mut Binding, bindable: &BTreeSet<String>) -> Option<Term> {
        match t {
            Term::App(Op::Relation(r), args) => {
                let problem = self.evaluator.problem();
                let rid = problem.relation_id(r)?;
                let rel = problem.relation_by_id(rid);
                let modes = rel.modes.as_ref()?;
                if args.get(rel.term_index) != Some(&Term::var(problem.target().name.clone())) {
                    return None;
                }
                let inputs = modes
                    .inputs
                    .iter()
                    .map(|&i| eval_formula(&args[i], env).ok())
                    .collect::<Option<Vec<Value>>>()?;
                match self.evaluator.evaluate(term, rid, &inputs, self.fuel, self.mode).ok()? {
                    EvalOutcome::Ok(outs) => {
                        let mut holds = true;
                        for (&pos, o) in modes.outputs.iter().zip(outs) {
                            match &args[pos] {
                                Term::Var(v) if bindable.contains(v) && !env.contains_key(v) => {
                                    env.insert(v.clone(), o);
                                }
                                a => holds &= eval_formula(a, env).ok()? == o,
                            }
                        }
                        Some(Term::bool(holds))
                    }
                    EvalOutcome::GuardFailure => Some(Term::bool(false)),
                    _ => None,
                }
            }
            Term::App(op, args) => Some(Term::App(
                op.clone(),
                args.iter().map(|a| self.resolve(term, a, env, bindable)).collect::<Option<_>>()?,
            )),
            Term::Quant(Quantifier::Exists, vars, body) => self.resolve_exists(term, vars, body, env, bindable),
            Term::Quant(..) => None,
            _ => Some(t.clone()),
        }
    }
}

#[cfg(test)]
mod tests;
