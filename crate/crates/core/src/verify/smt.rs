//! Candidate-specialized SMT-LIB encodings of the semantics.
//!
//! Every `(node, relation)` pair reachable from the constraints becomes a
//! Boolean function over the relation's non-term parameters. Nodes are
//! numbered in pre-order; a node's function is the disjunction over its
//! CHCs, with child relation applications replaced by calls to the child
//! node's function. Functions that call their own node are emitted with
//! `define-fun-rec` (or `define-funs-rec` for a group), the rest with
//! `define-fun`, callees first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::chc::{Premise, TermRef};
use crate::formula::{sorted_vars_sexpr, Op, Quantifier, Sort, Term};
use crate::problem::{ConstructorId, SynthesisProblem};
use crate::program::ProgramTerm;
use crate::sexpr::SExpr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("the candidate contains holes")]
    IncompleteTerm,
    #[error("sort `{0}` has no SMT encoding here")]
    UnsupportedSort(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
}

/// One encoded function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtFunction {
    pub name: String,
    pub node: usize,
    pub relation: String,
    pub params: Vec<(String, Sort)>,
    pub body: Term,
    /// The body calls a function of the same node.
    pub recursive: bool,
}

/// A universally quantified constraint with its variables renamed to the
/// free constants that stand for them in the negated query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniversalConstraint {
    pub constraint: usize,
    /// `(constant, variable, sort)`.
    pub vars: Vec<(String, String, Sort)>,
    /// The constraint body over the original variable names.
    pub body: Term,
}

/// The constraints of a problem split by how they are checked.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpecShape {
    /// Closed constraints, checked positively.
    pub ground: Vec<usize>,
    pub universal: Vec<UniversalConstraint>,
}

impl SpecShape {
    pub fn of(problem: &SynthesisProblem) -> SpecShape {
        let declared: IndexMap<&str, &Sort> =
            problem.declared_vars().iter().map(|(v, s)| (v.as_str(), s)).collect();
        let mut shape = SpecShape::default();
        let mut pending = Vec::new();
        for (k, c) in problem.constraints().iter().enumerate() {
            let mut vars: Vec<(String, Sort)> = Vec::new();
            let mut body = c;
            while let Term::Quant(Quantifier::Forall, vs, b) = body {
                vars.extend(vs.iter().cloned());
                body = b;
            }
            for v in body.free_vars() {
                if let Some(s) = declared.get(v.as_str()) {
                    if !vars.iter().any(|(w, _)| *w == v) {
                        vars.push((v, (*s).clone()));
                    }
                }
            }
            if vars.is_empty() {
                shape.ground.push(k);
            } else {
                pending.push((k, vars, body.clone()));
            }
        }
        // constants: declared variables keep their names, bound variables
        // keep theirs unless another constraint also binds the name
        let mut uses: BTreeMap<String, usize> = BTreeMap::new();
        for (_, vars, _) in &pending {
            for (v, _) in vars {
                if !declared.contains_key(v.as_str()) {
                    *uses.entry(v.clone()).or_default() += 1;
                }
            }
        }
        for (k, vars, body) in pending {
            let vars = vars
                .into_iter()
                .map(|(v, s)| {
                    let clash = !declared.contains_key(v.as_str())
                        && (uses[&v] > 1 || problem.relation(&v).is_some());
                    let c = if clash { format!("{v}!{k}") } else { v.clone() };
                    (c, v, s)
                })
                .collect();
            shape.universal.push(UniversalConstraint { constraint: k, vars, body });
        }
        shape
    }
}

/// The encoding of one candidate against a problem's constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtScript {
    pub functions: Vec<SmtFunction>,
    /// Definition commands, callees first.
    pub definitions: Vec<String>,
    /// Ground constraints, asserted as they are.
    pub ground_assertions: Vec<String>,
    /// Free constants standing for the universal variables.
    pub constants: Vec<(String, Sort)>,
    /// `(assert (not ...))` over the universal constraints, if any.
    pub negated: Option<String>,
}

const PREAMBLE: [&str; 2] = ["(set-option :produce-models true)", "(set-logic ALL)"];

impl SmtScript {
    pub fn recursive_count(&self) -> usize {
        self.functions.iter().filter(|f| f.recursive).count()
    }

    /// Checks the ground constraints: `sat` means they hold.
    pub fn ground_query(&self) -> Option<String> {
        if self.ground_assertions.is_empty() {
            return None;
        }
        let mut lines: Vec<String> = PREAMBLE.iter().map(|s| s.to_string()).collect();
        lines.extend(self.definitions.iter().cloned());
        lines.extend(self.ground_assertions.iter().cloned());
        lines.push("(check-sat)".into());
        Some(lines.join("\n") + "\n")
    }

    /// Checks the universal constraints: `unsat` means they hold, and a
    /// model of `sat` assigns the constants a counterexample.
    pub fn universal_query(&self) -> Option<String> {
        let negated = self.negated.as_ref()?;
        let mut lines: Vec<String> = PREAMBLE.iter().map(|s| s.to_string()).collect();
        for (c, s) in &self.constants {
            lines.push(format!("(declare-const {} {})", SExpr::symbol(c.clone()), s.to_sexpr()));
        }
        lines.extend(self.definitions.iter().cloned());
        lines.push(negated.clone());
        lines.push("(check-sat)".into());
        lines.push("(get-model)".into());
        Some(lines.join("\n") + "\n")
    }
}

impl fmt::Display for SmtScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in PREAMBLE {
            writeln!(f, "{l}")?;
        }
        for (c, s) in &self.constants {
            writeln!(f, "(declare-const {} {})", SExpr::symbol(c.clone()), s.to_sexpr())?;
        }
        for d in &self.definitions {
            writeln!(f, "{d}")?;
        }
        for a in &self.ground_assertions {
            writeln!(f, "{a}")?;
        }
        if let Some(n) = &self.negated {
            writeln!(f, "{n}")?;
        }
        writeln!(f, "(check-sat)")
    }
}

fn function_name(relation: &str, node: usize) -> String {
    format!("{relation}!{node}")
}

fn check_sort(s: &Sort) -> Result<(), EmitError> {
    match s {
        Sort::Int | Sort::Bool | Sort::BitVec(_) | Sort::String => Ok(()),
        Sort::Term(t) => Err(EmitError::UnsupportedSort(t.clone())),
    }
}

struct Flat {
    ctor: ConstructorId,
    children: Vec<usize>,
}

fn flatten(term: &ProgramTerm, out: &mut Vec<Flat>) -> Result<usize, EmitError> {
    let ProgramTerm::Node(n) = term else { return Err(EmitError::IncompleteTerm) };
    let id = out.len();
    out.push(Flat { ctor: n.ctor, children: Vec::new() });
    let mut children = Vec::with_capacity(n.children.len());
    for c in &n.children {
        children.push(flatten(c, out)?);
    }
    out[id].children = children;
    Ok(id)
}

struct Emitter<'a> {
    problem: &'a SynthesisProblem,
    nodes: Vec<Flat>,
    functions: BTreeMap<(usize, String), SmtFunction>,
}

impl Emitter<'_> {
    /// Defines `(node, relation)` and everything it calls. Returns `None`
    /// when the constructor has no clauses for the relation.
    fn define(&mut self, node: usize, relation: &str) -> Result<Option<String>, EmitError> {
        let key = (node, relation.to_string());
        let name = function_name(relation, node);
        if self.functions.contains_key(&key) {
            return Ok(Some(name));
        }
        let problem = self.problem;
        let rid = problem
            .relation_id(relation)
            .ok_or_else(|| EmitError::Unsupported(format!("unknown relation `{relation}`")))?;
        let rel = problem.relation_by_id(rid);
        let ctor = self.nodes[node].ctor;
        let chcs = problem.chcs_for(rid, ctor);
        if chcs.is_empty() {
            return Ok(None);
        }
        let params: Vec<(String, Sort)> = rel
            .params
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != rel.term_index)
            .map(|(_, p)| p.clone())
            .collect();
        for (_, s) in &params {
            check_sort(s)?;
        }
        // placeholder so self-calls terminate
        self.functions.insert(
            key.clone(),
            SmtFunction {
                name: name.clone(),
                node,
                relation: relation.to_string(),
                params: params.clone(),
                body: Term::bool(false),
                recursive: false,
            },
        );
        let mut disjuncts = Vec::new();
        let mut recursive = false;
        for &ci in chcs {
            let chc = &problem.chcs()[ci];
            let env = problem.chc_env(chc);
            let rename: IndexMap<&str, &str> = chc
                .head_args
                .iter()
                .zip(&rel.params)
                .map(|(a, (p, _))| (a.as_str(), p.as_str()))
                .collect();
            let head: BTreeSet<&str> = chc.head_args.iter().map(String::as_str).collect();
            let mut bound = Vec::new();
            for (v, s) in &env {
                if head.contains(v.as_str()) || s.is_term() {
                    continue;
                }
                check_sort(s)?;
                bound.push((v.clone(), s.clone()));
            }
            let sub = |v: &str| rename.get(v).map(|p| Term::var(*p));
            let mut conj = Vec::new();
            for p in &chc.premises {
                match p {
                    Premise::Constraint(t) => conj.push(t.substitute(&sub)),
                    Premise::Relation(app) => {
                        let target = match app.term {
                            TermRef::SelfTerm => node,
                            TermRef::Child(i) => self.nodes[node].children[i],
                        };
                        recursive |= target == node;
                        let callee_rel = problem.relation(&app.relation).ok_or_else(|| {
                            EmitError::Unsupported(format!("unknown relation `{}`", app.relation))
                        })?;
                        let args: Vec<Term> = app
                            .args
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != callee_rel.term_index)
                            .map(|(_, a)| sub(a).unwrap_or_else(|| Term::var(a.clone())))
                            .collect();
                        match self.define(target, &app.relation)? {
                            Some(f) => conj.push(Term::App(Op::Relation(f), args)),
                            None => conj.push(Term::bool(false)),
                        }
                    }
                }
            }
            let body = Term::and(conj);
            disjuncts.push(if bound.is_empty() {
                body
            } else {
                Term::Quant(Quantifier::Exists, bound, Box::new(body))
            });
        }
        let body = match disjuncts.len() {
            1 => disjuncts.pop().unwrap(),
            _ => Term::app(crate::formula::Builtin::Or, disjuncts),
        };
        let f = self.functions.get_mut(&key).unwrap();
        f.body = body;
        f.recursive = recursive;
        Ok(Some(name))
    }

    /// Replaces applications of relations to the target by calls on the
    /// root node.
    fn spec_term(&mut self, t: &Term, target: &str) -> Result<Term, EmitError> {
        Ok(match t {
            Term::Var(_) | Term::Lit(_) => t.clone(),
            Term::App(Op::Relation(r), args) => {
                let rel = self
                    .problem
                    .relation(r)
                    .ok_or_else(|| EmitError::Unsupported(format!("unknown relation `{r}`")))?;
                if args.get(rel.term_index) != Some(&Term::var(target)) {
                    return Err(EmitError::Unsupported(format!(
                        "`{r}` applied to something other than `{target}`"
                    )));
                }
                let rest = args
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != rel.term_index)
                    .map(|(_, a)| self.spec_term(a, target))
                    .collect::<Result<Vec<_>, _>>()?;
                match self.define(0, r)? {
                    Some(f) => Term::App(Op::Relation(f), rest),
                    None => Term::bool(false),
                }
            }
            Term::App(op, args) => Term::App(
                op.clone(),
                args.iter().map(|a| self.spec_term(a, target)).collect::<Result<_, _>>()?,
            ),
            Term::Quant(q, vars, body) => {
                for (_, s) in vars {
                    check_sort(s)?;
                }
                Term::Quant(*q, vars.clone(), Box::new(self.spec_term(body, target)?))
            }
        })
    }

    fn definitions(&self) -> Vec<String> {
        // callees first: children have larger pre-order numbers
        let mut out = Vec::new();
        for node in (0..self.nodes.len()).rev() {
            let group: Vec<&SmtFunction> =
                self.functions.range((node, String::new())..).take_while(|((n, _), _)| *n == node).map(|(_, f)| f).collect();
            if group.is_empty() {
                continue;
            }
            if group.iter().any(|f| f.recursive) {
                let decl = |f: &SmtFunction| {
                    SExpr::list([
                        SExpr::symbol(f.name.clone()),
                        sorted_vars_sexpr(&f.params),
                        SExpr::symbol("Bool"),
                    ])
                };
                if let [f] = group.as_slice() {
                    let mut items = vec![SExpr::symbol("define-fun-rec")];
                    items.extend(decl(f).as_list().unwrap().iter().cloned());
                    items.push(f.body.to_sexpr());
                    out.push(SExpr::list(items).to_string());
                } else {
                    out.push(
                        SExpr::list([
                            SExpr::symbol("define-funs-rec"),
                            SExpr::list(group.iter().map(|f| decl(f))),
                            SExpr::list(group.iter().map(|f| f.body.to_sexpr())),
                        ])
                        .to_string(),
                    );
                }
            } else {
                // same-node calls are absent, so any order works
                for f in group {
                    out.push(
                        SExpr::list([
                            SExpr::symbol("define-fun"),
                            SExpr::symbol(f.name.clone()),
                            sorted_vars_sexpr(&f.params),
                            SExpr::symbol("Bool"),
                            f.body.to_sexpr(),
                        ])
                        .to_string(),
                    );
                }
            }
        }
        out
    }
}

/// Encodes `term` as the problem's solution.
pub fn emit_smt_script(term: &ProgramTerm, problem: &SynthesisProblem) -> Result<SmtScript, EmitError> {
    let mut nodes = Vec::new();
    flatten(term, &mut nodes)?;
    let mut em = Emitter { problem, nodes, functions: BTreeMap::new() };
    let target = problem.target().name.clone();
    let shape = SpecShape::of(problem);
    let mut ground_assertions = Vec::new();
    for &k in &shape.ground {
        let t = em.spec_term(&problem.constraints()[k], &target)?;
        ground_assertions.push(format!("(assert {t})"));
    }
    let mut constants = Vec::new();
    let mut instances = Vec::new();
    for u in &shape.universal {
        let body = em.spec_term(&u.body, &target)?;
        let map: IndexMap<&str, &str> = u.vars.iter().map(|(c, v, _)| (v.as_str(), c.as_str())).collect();
        instances.push(body.substitute(&|v| map.get(v).map(|c| Term::var(*c))));
        for (c, _, s) in &u.vars {
            check_sort(s)?;
            if !constants.iter().any(|(d, _)| d == c) {
                constants.push((c.clone(), s.clone()));
            }
        }
    }
    let negated = (!instances.is_empty()).then(|| {
        format!("(assert (not {}))", Term::and(instances))
    });
    let definitions = em.definitions();
    Ok(SmtScript {
        functions: em.functions.into_values().collect(),
        definitions,
        ground_assertions,
        constants,
        negated,
    })
}
