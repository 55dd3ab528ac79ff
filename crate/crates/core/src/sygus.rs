//! SyGuS interop.
//!
//! A SyGuS problem becomes a SemGuS problem with one term type per
//! grammar nonterminal and one constructor per production. Each
//! nonterminal `N` gets a relation `N.Sem ((t N) params.. (out sort))`
//! whose single CHC per constructor computes `out` from the children's
//! outputs. Every application `g(args)` in a constraint `φ` is replaced by
//! a fresh output `o`, giving `(exists (o..) (and φ[o..] (Start.Sem g args o)..))`.
//!
//! The way back accepts exactly the problems of that shape: one output
//! per relation, one CHC per constructor, plans made of computes and
//! child invocations on the head inputs, and constraints in the shape
//! above.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use indexmap::IndexMap;
use thiserror::Error;

use crate::formula::{Builtin, Op, Quantifier, Sort, Term};
use crate::operational::{operationalize_all, Instruction};
use crate::chc::TermRef;
use crate::problem::{analyze, AnalysisError, SynthesisProblem};
use crate::sexpr::{read_sexprs, ReadError, SExpr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SygusProblem {
    pub logic: Option<String>,
    pub function: String,
    pub params: Vec<(String, Sort)>,
    pub ret: Sort,
    /// Nonterminals in declaration order; the first is the start symbol.
    pub nonterminals: Vec<(String, Sort)>,
    /// Production schemas, parallel to `nonterminals`.
    pub rules: Vec<Vec<SExpr>>,
    pub declared_vars: Vec<(String, Sort)>,
    pub constraints: Vec<SExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SygusError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error("malformed `{0}`")]
    Malformed(String),
    #[error("unsupported command `{0}`")]
    UnsupportedCommand(String),
    #[error("unsupported theory or sort `{0}`")]
    UnsupportedTheory(String),
    #[error("no synth-fun")]
    MissingSynthFun,
    #[error("synth-fun `{0}` has no grammar")]
    MissingGrammar(String),
    #[error("grammar symbol `{0}` is neither a parameter, a nonterminal nor an operator")]
    UnknownSymbol(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error(transparent)]
    Sygus(#[from] SygusError),
    #[error("`{0}` used as a value or inside a quantifier")]
    HigherOrderConstraint(String),
    #[error("translated problem rejected: {0}")]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not in the SyGuS fragment: {reason}")]
pub struct NotInFragment {
    pub reason: String,
    /// Index of the first violating CHC, when one is to blame.
    pub chc: Option<usize>,
}

fn not_in(reason: impl Into<String>, chc: Option<usize>) -> NotInFragment {
    NotInFragment { reason: reason.into(), chc }
}

fn sort_of(e: &SExpr) -> Result<Sort, SygusError> {
    match Sort::from_sexpr(e, |_| false) {
        Some(s) if !s.is_term() => Ok(s),
        _ => Err(SygusError::UnsupportedTheory(e.to_string())),
    }
}

fn sorted_list(e: &SExpr) -> Result<Vec<(String, Sort)>, SygusError> {
    let items = e.as_list().ok_or_else(|| SygusError::Malformed(e.to_string()))?;
    items
        .iter()
        .map(|p| match p.as_list() {
            Some([SExpr::Symbol(n), s]) => Ok((n.clone(), sort_of(s)?)),
            _ => Err(SygusError::Malformed(p.to_string())),
        })
        .collect()
}

/// Reads the supported SyGuS v2 subset: `set-logic`, `synth-fun` with a
/// grammar (with or without the leading nonterminal declaration list),
/// `declare-var`, `constraint` and `check-synth`. `set-info` and
/// `set-option` are ignored.
pub fn parse_sygus(text: &str) -> Result<SygusProblem, SygusError> {
    let mut logic = None;
    let mut synth = None;
    let mut declared_vars = Vec::new();
    let mut constraints = Vec::new();
    for cmd in read_sexprs(text)? {
        let items = cmd.as_list().ok_or_else(|| SygusError::Malformed(cmd.to_string()))?;
        match cmd.head() {
            Some("set-logic") => match items {
                [_, SExpr::Symbol(l)] => logic = Some(l.clone()),
                _ => return Err(SygusError::Malformed(cmd.to_string())),
            },
            Some("set-info" | "set-option" | "check-synth") => {}
            Some("declare-var") => match items {
                [_, SExpr::Symbol(v), s] => declared_vars.push((v.clone(), sort_of(s)?)),
                _ => return Err(SygusError::Malformed(cmd.to_string())),
            },
            Some("constraint") => match items {
                [_, c] => constraints.push(c.clone()),
                _ => return Err(SygusError::Malformed(cmd.to_string())),
            },
            Some("synth-fun") => synth = Some(parse_synth_fun(&cmd, items)?),
            Some(other) => return Err(SygusError::UnsupportedCommand(other.to_string())),
            None => return Err(SygusError::Malformed(cmd.to_string())),
        }
    }
    let (function, params, ret, nonterminals, rules) = synth.ok_or(SygusError::MissingSynthFun)?;
    Ok(SygusProblem { logic, function, params, ret, nonterminals, rules, declared_vars, constraints })
}

type SynthFun = (String, Vec<(String, Sort)>, Sort, Vec<(String, Sort)>, Vec<Vec<SExpr>>);

fn parse_synth_fun(cmd: &SExpr, items: &[SExpr]) -> Result<SynthFun, SygusError> {
    let (name, params, ret, rest) = match items {
        [_, SExpr::Symbol(n), ps, r, rest @ ..] => (n.clone(), sorted_list(ps)?, sort_of(r)?, rest),
        _ => return Err(SygusError::Malformed(cmd.to_string())),
    };
    let rule_list = match rest {
        [] => return Err(SygusError::MissingGrammar(name)),
        [rules] => rules,
        [_decls, rules] => rules,
        _ => return Err(SygusError::Malformed(cmd.to_string())),
    };
    let mut nonterminals = Vec::new();
    let mut rules = Vec::new();
    for r in rule_list.as_list().ok_or_else(|| SygusError::Malformed(rule_list.to_string()))? {
        match r.as_list() {
            Some([SExpr::Symbol(n), s, prods]) => {
                nonterminals.push((n.clone(), sort_of(s)?));
                rules.push(prods.as_list().ok_or_else(|| SygusError::Malformed(r.to_string()))?.to_vec());
            }
            _ => return Err(SygusError::Malformed(r.to_string())),
        }
    }
    let nts: HashSet<&str> = nonterminals.iter().map(|(n, _)| n.as_str()).collect();
    let ps: HashSet<&str> = params.iter().map(|(n, _)| n.as_str()).collect();
    for p in rules.iter().flatten() {
        check_schema(p, &nts, &ps)?;
    }
    Ok((name, params, ret, nonterminals, rules))
}

fn check_schema(e: &SExpr, nts: &HashSet<&str>, params: &HashSet<&str>) -> Result<(), SygusError> {
    match e {
        SExpr::Symbol(s) if nts.contains(s.as_str()) || params.contains(s.as_str()) => Ok(()),
        SExpr::Symbol(s) => Err(SygusError::UnknownSymbol(s.clone())),
        SExpr::List(items) => match items.split_first() {
            Some((SExpr::Symbol(op), args)) if Builtin::from_name(op).is_some() => {
                args.iter().try_for_each(|a| check_schema(a, nts, params))
            }
            Some((SExpr::Symbol(op), _)) if op == "Constant" || op == "Variable" => {
                Err(SygusError::UnsupportedTheory(e.to_string()))
            }
            _ => Err(SygusError::UnknownSymbol(e.to_string())),
        },
        SExpr::Keyword(_) => Err(SygusError::Malformed(e.to_string())),
        _ => Ok(()),
    }
}

/// Canonical SyGuS text for `p`.
pub fn print_sygus(p: &SygusProblem) -> String {
    let mut out = String::new();
    if let Some(l) = &p.logic {
        let _ = writeln!(out, "(set-logic {l})");
    }
    let sorted = |vs: &[(String, Sort)]| {
        SExpr::list(vs.iter().map(|(v, s)| SExpr::list([SExpr::symbol(v.clone()), s.to_sexpr()])))
    };
    let rules = SExpr::list(p.nonterminals.iter().zip(&p.rules).map(|((n, s), prods)| {
        SExpr::list([SExpr::symbol(n.clone()), s.to_sexpr(), SExpr::list(prods.iter().cloned())])
    }));
    let _ = writeln!(
        out,
        "{}",
        SExpr::list([
            SExpr::symbol("synth-fun"),
            SExpr::symbol(p.function.clone()),
            sorted(&p.params),
            p.ret.to_sexpr(),
            sorted(&p.nonterminals),
            rules,
        ])
    );
    for (v, s) in &p.declared_vars {
        let _ = writeln!(out, "(declare-var {} {})", SExpr::symbol(v.clone()), s.to_sexpr());
    }
    for c in &p.constraints {
        let _ = writeln!(out, "(constraint {c})");
    }
    out.push_str("(check-synth)\n");
    out
}

fn constructor_base(e: &SExpr) -> String {
    let raw = match e {
        SExpr::List(items) => items.first().map(|h| h.to_string()).unwrap_or_default(),
        other => other.to_string(),
    };
    let keep: String = raw
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(*c))
        .collect();
    if keep.is_empty() {
        "$c".into()
    } else {
        format!("${keep}")
    }
}

fn fresh(base: &str, used: &mut HashSet<String>) -> String {
    let mut name = base.to_string();
    let mut n = 2;
    while used.contains(&name) {
        name = format!("{base}_{n}");
        n += 1;
    }
    used.insert(name.clone());
    name
}

/// Nonterminal occurrences of a schema, left to right.
fn schema_children<'a>(e: &'a SExpr, nts: &HashSet<&str>, out: &mut Vec<&'a str>) {
    match e {
        SExpr::Symbol(s) if nts.contains(s.as_str()) => out.push(s),
        SExpr::List(items) => items.iter().skip(1).for_each(|a| schema_children(a, nts, out)),
        _ => {}
    }
}

/// Replaces nonterminal occurrences by the given variables, in order.
fn instantiate(e: &SExpr, nts: &HashSet<&str>, vars: &mut std::slice::Iter<'_, String>) -> SExpr {
    match e {
        SExpr::Symbol(s) if nts.contains(s.as_str()) => SExpr::symbol(vars.next().unwrap().clone()),
        SExpr::List(items) => {
            let mut out = vec![items[0].clone()];
            out.extend(items[1..].iter().map(|a| instantiate(a, nts, vars)));
            SExpr::List(out)
        }
        other => other.clone(),
    }
}

fn relation_name(nt: &str) -> String {
    format!("{nt}.Sem")
}

/// The SemGuS source commands equivalent to `p`.
pub fn sygus_to_semgus_commands(p: &SygusProblem) -> Result<Vec<SExpr>, TranslateError> {
    let nts: HashSet<&str> = p.nonterminals.iter().map(|(n, _)| n.as_str()).collect();
    let mut used: HashSet<String> = p.params.iter().map(|(n, _)| n.clone()).collect();
    used.extend(nts.iter().map(|s| s.to_string()));
    let t = fresh("t", &mut used);
    let out = fresh("out", &mut used);
    let mut ctor_names: HashSet<String> = HashSet::new();
    let mut cmds = Vec::new();
    if let Some(l) = &p.logic {
        cmds.push(SExpr::list([SExpr::symbol("set-logic"), SExpr::symbol(l.clone())]));
    }
    let mut ctor_lists = Vec::new();
    let mut bodies = Vec::new();
    for prods in &p.rules {
        let mut ctors = Vec::new();
        let mut arms = Vec::new();
        for prod in prods {
            let name = fresh(&constructor_base(prod), &mut ctor_names);
            let mut kids = Vec::new();
            schema_children(prod, &nts, &mut kids);
            let tvars: Vec<String> = (1..=kids.len()).map(|i| format!("{t}{i}")).collect();
            let vvars: Vec<String> = (1..=kids.len()).map(|i| format!("{out}{i}")).collect();
            ctors.push(SExpr::list(
                std::iter::once(SExpr::symbol(name.clone())).chain(kids.iter().map(|k| SExpr::symbol(*k))),
            ));
            let pattern = if kids.is_empty() {
                SExpr::list([SExpr::symbol(name)])
            } else {
                SExpr::list(std::iter::once(SExpr::symbol(name)).chain(tvars.iter().map(|v| SExpr::symbol(v.clone()))))
            };
            let value = instantiate(prod, &nts, &mut vvars.iter());
            let compute = SExpr::list([SExpr::symbol("="), SExpr::symbol(out.clone()), value]);
            let body = if kids.is_empty() {
                compute
            } else {
                let mut conj = vec![SExpr::symbol("and")];
                for ((k, tv), vv) in kids.iter().zip(&tvars).zip(&vvars) {
                    let mut app = vec![SExpr::symbol(relation_name(k)), SExpr::symbol(tv.clone())];
                    app.extend(p.params.iter().map(|(n, _)| SExpr::symbol(n.clone())));
                    app.push(SExpr::symbol(vv.clone()));
                    conj.push(SExpr::List(app));
                }
                conj.push(compute);
                let sorts = kids.iter().map(|k| &p.nonterminals.iter().find(|(n, _)| n == k).unwrap().1);
                let binders =
                    SExpr::list(vvars.iter().zip(sorts).map(|(v, s)| SExpr::list([SExpr::symbol(v.clone()), s.to_sexpr()])));
                SExpr::list([SExpr::symbol("exists"), binders, SExpr::List(conj)])
            };
            arms.push(SExpr::list([pattern, body]));
        }
        ctor_lists.push(SExpr::List(ctors));
        bodies.push(SExpr::list([
            SExpr::symbol("!"),
            SExpr::list([SExpr::symbol("match"), SExpr::symbol(t.clone()), SExpr::List(arms)]),
            SExpr::Keyword("input".into()),
            SExpr::list(p.params.iter().map(|(n, _)| SExpr::symbol(n.clone()))),
            SExpr::Keyword("output".into()),
            SExpr::list([SExpr::symbol(out.clone())]),
        ]));
    }
    cmds.push(SExpr::list([
        SExpr::symbol("declare-term-types"),
        SExpr::list(p.nonterminals.iter().map(|(n, _)| SExpr::list([SExpr::symbol(n.clone()), SExpr::num(0)]))),
        SExpr::List(ctor_lists),
    ]));
    let decls = p.nonterminals.iter().map(|(n, s)| {
        let mut params = vec![SExpr::list([SExpr::symbol(t.clone()), SExpr::symbol(n.clone())])];
        params.extend(p.params.iter().map(|(v, s)| SExpr::list([SExpr::symbol(v.clone()), s.to_sexpr()])));
        params.push(SExpr::list([SExpr::symbol(out.clone()), s.to_sexpr()]));
        SExpr::list([SExpr::symbol(relation_name(n)), SExpr::List(params), SExpr::symbol("Bool")])
    });
    cmds.push(SExpr::list([SExpr::symbol("define-funs-rec"), SExpr::list(decls), SExpr::List(bodies)]));
    let start = p.nonterminals.first().map(|(n, _)| n.clone()).unwrap_or_default();
    cmds.push(SExpr::list([
        SExpr::symbol("synth-fun"),
        SExpr::symbol(p.function.clone()),
        SExpr::list([]),
        SExpr::symbol(start.clone()),
    ]));
    for (v, s) in &p.declared_vars {
        cmds.push(SExpr::list([SExpr::symbol("declare-var"), SExpr::symbol(v.clone()), s.to_sexpr()]));
    }
    for c in &p.constraints {
        cmds.push(SExpr::list([SExpr::symbol("constraint"), embed_constraint(p, &start, c)?]));
    }
    cmds.push(SExpr::list([SExpr::symbol("check-synth")]));
    Ok(cmds)
}

fn embed_constraint(p: &SygusProblem, start: &str, c: &SExpr) -> Result<SExpr, TranslateError> {
    let mut apps = Vec::new();
    let phi = replace_calls(p, c, &mut apps, false)?;
    if apps.is_empty() {
        return Ok(phi);
    }
    let binders = SExpr::list(apps.iter().map(|(o, _)| SExpr::list([SExpr::symbol(o.clone()), p.ret.to_sexpr()])));
    let mut conj = vec![SExpr::symbol("and"), phi];
    for (o, args) in &apps {
        let mut app = vec![SExpr::symbol(relation_name(start)), SExpr::symbol(p.function.clone())];
        app.extend(args.iter().cloned());
        app.push(SExpr::symbol(o.clone()));
        conj.push(SExpr::List(app));
    }
    Ok(SExpr::list([SExpr::symbol("exists"), binders, SExpr::List(conj)]))
}

fn replace_calls(
    p: &SygusProblem,
    e: &SExpr,
    apps: &mut Vec<(String, Vec<SExpr>)>,
    under_binder: bool,
) -> Result<SExpr, TranslateError> {
    match e {
        SExpr::Symbol(s) if *s == p.function => Err(TranslateError::HigherOrderConstraint(s.clone())),
        SExpr::List(items) => match items.first() {
            Some(SExpr::Symbol(h)) if *h == p.function => {
                if under_binder {
                    return Err(TranslateError::HigherOrderConstraint(e.to_string()));
                }
                let args = items[1..]
                    .iter()
                    .map(|a| replace_calls(p, a, apps, under_binder))
                    .collect::<Result<Vec<_>, _>>()?;
                if args.len() != p.params.len() {
                    return Err(TranslateError::HigherOrderConstraint(e.to_string()));
                }
                let o = format!("o!{}", apps.len() + 1);
                apps.push((o.clone(), args));
                Ok(SExpr::symbol(o))
            }
            Some(SExpr::Symbol(h)) if h == "forall" || h == "exists" || h == "let" => {
                let mut out = items[..2.min(items.len())].to_vec();
                for a in &items[2.min(items.len())..] {
                    out.push(replace_calls(p, a, apps, true)?);
                }
                Ok(SExpr::List(out))
            }
            _ => Ok(SExpr::List(
                items.iter().map(|a| replace_calls(p, a, apps, under_binder)).collect::<Result<_, _>>()?,
            )),
        },
        other => Ok(other.clone()),
    }
}

pub fn sygus_to_semgus(p: &SygusProblem) -> Result<SynthesisProblem, TranslateError> {
    Ok(analyze(&sygus_to_semgus_commands(p)?)?)
}

/// Inverts [`sygus_to_semgus`] on problems of the shape it produces.
pub fn semgus_to_sygus(problem: &SynthesisProblem) -> Result<SygusProblem, NotInFragment> {
    let target = problem.target();
    // (nonterminal, term type, constructors)
    let nts: Vec<(String, String, Vec<(String, Vec<String>)>)> = match &target.grammar {
        Some(g) => g
            .nonterminals
            .iter()
            .map(|(n, tt)| {
                let prods = g.rules[n].iter().map(|p| (p.constructor.clone(), p.children.clone())).collect();
                (n.clone(), tt.clone(), prods)
            })
            .collect(),
        None => {
            let mut order: Vec<&crate::problem::TermTypeDecl> = problem.term_types().iter().collect();
            if let Some(i) = order.iter().position(|t| t.name == target.term_type) {
                let s = order.remove(i);
                order.insert(0, s);
            }
            order
                .into_iter()
                .map(|t| {
                    let prods = t.constructors.iter().map(|c| (c.operator.clone(), c.children.clone())).collect();
                    (t.name.clone(), t.name.clone(), prods)
                })
                .collect()
        }
    };
    let nt_names: BTreeSet<&str> = nts.iter().map(|(n, _, _)| n.as_str()).collect();
    // one relation per term type, exactly one output
    let mut rel_of: IndexMap<String, &crate::problem::SemanticRelation> = IndexMap::new();
    for (_, tt, _) in &nts {
        let rels: Vec<_> = problem.relations_for(tt).collect();
        let [rel] = rels.as_slice() else {
            return Err(not_in(format!("term type `{tt}` has {} semantic relations", rels.len()), None));
        };
        let Some(modes) = &rel.modes else {
            return Err(not_in(format!("`{}` has no input/output annotation", rel.name), None));
        };
        if modes.outputs.len() != 1 {
            return Err(not_in(format!("`{}` has {} outputs", rel.name, modes.outputs.len()), None));
        }
        rel_of.insert(tt.clone(), rel);
    }
    let start_rel = rel_of[&target.term_type];
    let start_modes = start_rel.modes.as_ref().unwrap();
    let params: Vec<(String, Sort)> = start_modes.inputs.iter().map(|&i| start_rel.params[i].clone()).collect();
    for (n, _) in &params {
        if nt_names.contains(n.as_str()) {
            return Err(not_in(format!("parameter `{n}` shares a nonterminal's name"), None));
        }
    }
    let in_sorts: Vec<&Sort> = params.iter().map(|(_, s)| s).collect();
    for rel in rel_of.values() {
        let m = rel.modes.as_ref().unwrap();
        let sorts: Vec<&Sort> = m.inputs.iter().map(|&i| &rel.params[i].1).collect();
        if sorts != in_sorts {
            return Err(not_in(format!("`{}` takes different inputs than `{}`", rel.name, start_rel.name), None));
        }
    }
    let table = operationalize_all(problem);
    let mut nonterminals = Vec::new();
    let mut rules = Vec::new();
    for (nt, tt, prods) in &nts {
        let rel = rel_of[tt];
        let rid = problem.relation_id(&rel.name).unwrap();
        let modes = rel.modes.as_ref().unwrap();
        nonterminals.push((nt.clone(), rel.params[modes.outputs[0]].1.clone()));
        let mut schemas = Vec::new();
        for (ctor, children) in prods {
            let cid = problem.constructor_id(ctor).unwrap();
            let chcs = problem.chcs_for(rid, cid);
            if chcs.len() != 1 {
                return Err(not_in(
                    format!("`{ctor}` has {} CHCs for `{}`", chcs.len(), rel.name),
                    chcs.get(1).copied(),
                ));
            }
            let chc_index = chcs[0];
            let plans = table.get(rid, cid);
            let [plan] = plans else {
                let why = table
                    .errors
                    .iter()
                    .find(|(i, _)| *i == chc_index)
                    .map_or_else(|| "no evaluation plan".to_string(), |(_, e)| e.to_string());
                return Err(not_in(why, Some(chc_index)));
            };
            schemas.push(schema_of(problem, plan, rel, children, &params, &rel_of, &nts, chc_index)?);
        }
        rules.push(schemas);
    }
    let mut constraints = Vec::new();
    for c in problem.constraints() {
        constraints.push(unembed_constraint(&target.name, start_rel, c)?);
    }
    let logic = problem.metadata().iter().find(|(k, _)| k == "set-logic").and_then(|(_, v)| v.as_symbol().map(String::from));
    let ret = nonterminals[0].1.clone();
    Ok(SygusProblem {
        logic,
        function: target.name.clone(),
        params,
        ret,
        nonterminals,
        rules,
        declared_vars: problem.declared_vars().to_vec(),
        constraints,
    })
}

const CHILD_MARK: &str = "\u{1}child";

#[allow(clippy::too_many_arguments)]
fn schema_of(
    problem: &SynthesisProblem,
    plan: &crate::operational::EvaluationPlan,
    rel: &crate::problem::SemanticRelation,
    children: &[String],
    params: &[(String, Sort)],
    rel_of: &IndexMap<String, &crate::problem::SemanticRelation>,
    nts: &[(String, String, Vec<(String, Vec<String>)>)],
    chc_index: usize,
) -> Result<SExpr, NotInFragment> {
    let chc = &problem.chcs()[plan.chc];
    let modes = rel.modes.as_ref().unwrap();
    let head_inputs: Vec<&String> = modes.inputs.iter().map(|&i| &chc.head_args[i]).collect();
    let head_output = &chc.head_args[modes.outputs[0]];
    let mut env: IndexMap<String, Term> = head_inputs
        .iter()
        .zip(params)
        .map(|(h, (p, _))| ((*h).clone(), Term::var(p.clone())))
        .collect();
    let mut invoked = vec![false; children.len()];
    let fail = |why: String| Err(not_in(why, Some(chc_index)));
    for ins in &plan.instructions {
        match ins {
            Instruction::Guard(g) => return fail(format!("guard `{g}`")),
            Instruction::Invoke { target, relation, inputs, outputs } => {
                let TermRef::Child(i) = target else {
                    return fail(format!("`{}` invokes its own term", chc.constructor));
                };
                let child_nt = &children[*i];
                let child_tt = &nts.iter().find(|(n, _, _)| n == child_nt).unwrap().1;
                if rel_of[child_tt].name != *relation {
                    return fail(format!("child {i} is run under `{relation}`"));
                }
                if invoked[*i] {
                    return fail(format!("child {i} is run twice"));
                }
                invoked[*i] = true;
                if inputs.iter().collect::<Vec<_>>() != head_inputs {
                    return fail(format!("child {i} is not run on the head inputs"));
                }
                let [o] = outputs.as_slice() else {
                    return fail(format!("child {i} has several outputs"));
                };
                env.insert(o.clone(), Term::var(format!("{CHILD_MARK}{i}")));
            }
            Instruction::Compute { var, expr } => {
                if let Some(v) = expr.free_vars().into_iter().find(|v| !env.contains_key(v)) {
                    return fail(format!("`{v}` is not computed from inputs and children"));
                }
                let e = expr.substitute(&|v| env.get(v).cloned());
                if e.has_quantifier() || e.mentions_relation() {
                    return fail(format!("`{var}` is not a plain term"));
                }
                env.insert(var.clone(), e);
            }
        }
    }
    let Some(body) = env.get(head_output) else {
        return fail(format!("`{head_output}` is never computed"));
    };
    if invoked.iter().any(|b| !b) {
        return fail("a child is never run".into());
    }
    let schema = body.to_sexpr();
    let mut seen = Vec::new();
    let schema = unmark(&schema, children, &mut seen);
    if seen != (0..children.len()).collect::<Vec<_>>() {
        return fail("child outputs are not used once each, in order".into());
    }
    Ok(schema)
}

fn unmark(e: &SExpr, children: &[String], seen: &mut Vec<usize>) -> SExpr {
    match e {
        SExpr::Symbol(s) => match s.strip_prefix(CHILD_MARK) {
            Some(i) => {
                let i: usize = i.parse().unwrap();
                seen.push(i);
                SExpr::symbol(children[i].clone())
            }
            None => e.clone(),
        },
        SExpr::List(items) => SExpr::List(items.iter().map(|a| unmark(a, children, seen)).collect()),
        other => other.clone(),
    }
}

fn unembed_constraint(
    target: &str,
    start_rel: &crate::problem::SemanticRelation,
    c: &Term,
) -> Result<SExpr, NotInFragment> {
    let bad = || not_in(format!("constraint `{c}` is not in SyGuS shape"), None);
    if !c.mentions_relation() {
        return Ok(c.to_sexpr());
    }
    let out_pos = start_rel.modes.as_ref().unwrap().outputs[0];
    let call = |args: &[Term]| -> Option<(Vec<Term>, Term)> {
        if args.get(start_rel.term_index) != Some(&Term::var(target)) {
            return None;
        }
        let ins = args
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != start_rel.term_index && *i != out_pos)
            .map(|(_, a)| a.clone())
            .collect();
        Some((ins, args[out_pos].clone()))
    };
    let g = |ins: Vec<Term>| Term::App(Op::Relation(target.to_string()), ins);
    match c {
        Term::App(Op::Relation(r), args) if *r == start_rel.name => {
            let (ins, out) = call(args).ok_or_else(bad)?;
            if ins.iter().chain([&out]).any(Term::mentions_relation) {
                return Err(bad());
            }
            Ok(Term::eq(g(ins), out).to_sexpr())
        }
        Term::Quant(Quantifier::Exists, vars, body) => {
            let Term::App(Op::Builtin(Builtin::And), conj) = &**body else { return Err(bad()) };
            if conj.len() != vars.len() + 1 || conj[0].mentions_relation() {
                return Err(bad());
            }
            let mut defs: IndexMap<String, Term> = IndexMap::new();
            for app in &conj[1..] {
                let Term::App(Op::Relation(r), args) = app else { return Err(bad()) };
                if *r != start_rel.name {
                    return Err(bad());
                }
                let (ins, out) = call(args).ok_or_else(bad)?;
                let Term::Var(o) = out else { return Err(bad()) };
                if !vars.iter().any(|(v, _)| *v == o) || defs.contains_key(&o) {
                    return Err(bad());
                }
                let ins = ins.iter().map(|a| a.substitute(&|v| defs.get(v).cloned())).collect();
                defs.insert(o, g(ins));
            }
            Ok(conj[0].substitute(&|v| defs.get(v).cloned()).to_sexpr())
        }
        _ => Err(bad()),
    }
}
