//! Constrained Horn clauses and the desugaring of `define-funs-rec` +
//! `match` semantic definitions into them.
//!
//! Each match arm lists one or more alternatives after its pattern. Every
//! alternative is an optional leading `exists` block around a conjunction
//! and becomes one CHC. Conjuncts whose head is a declared semantic relation
//! become body applications; everything else joins the constraint.

use std::collections::{BTreeSet, HashSet};

use indexmap::IndexMap;
use thiserror::Error;

use crate::formula::{
    formula_sort, parse_sorted_vars, term_from_sexpr, Sort, SortEnv, SortError, Term, TermError,
};
use crate::problem::{SemanticRelation, TermTypeDecl};
use crate::sexpr::{SExpr, Span};

/// Which term a body application runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermRef {
    /// The head term itself (recursion, e.g. a loop).
    SelfTerm,
    /// The i-th child bound by the constructor pattern.
    Child(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationApp {
    pub relation: String,
    /// One variable per relation parameter, the term position included.
    pub args: Vec<String>,
    pub term: TermRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Premise {
    Relation(RelationApp),
    Constraint(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chc {
    pub head_relation: String,
    /// The relation's signature instance, term variable included.
    pub head_args: Vec<String>,
    pub constructor: String,
    pub child_vars: Vec<String>,
    /// Body conjuncts in source order.
    pub premises: Vec<Premise>,
    pub auxiliaries: Vec<(String, Sort)>,
}

impl Chc {
    pub fn body_applications(&self) -> impl Iterator<Item = &RelationApp> {
        self.premises.iter().filter_map(|p| match p {
            Premise::Relation(app) => Some(app),
            Premise::Constraint(_) => None,
        })
    }

    pub fn constraint_conjuncts(&self) -> impl Iterator<Item = &Term> {
        self.premises.iter().filter_map(|p| match p {
            Premise::Constraint(t) => Some(t),
            Premise::Relation(_) => None,
        })
    }

    /// The conjunction of all non-relation premises.
    pub fn constraint(&self) -> Term {
        Term::and(self.constraint_conjuncts().cloned().collect())
    }

    pub fn term_var(&self, term_index: usize) -> &str {
        &self.head_args[term_index]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChcErrorKind {
    #[error("match on `{relation}` misses constructors {missing:?}")]
    NonExhaustiveMatch { relation: String, missing: Vec<String> },
    #[error("constructor `{constructor}` does not belong to term type `{term_type}`")]
    UnknownConstructor { constructor: String, term_type: String },
    #[error("unresolved name `{0}`")]
    UnresolvedName(String),
    #[error("{0}")]
    IllSorted(String),
    #[error("duplicate match arm for `{0}`")]
    DuplicateArm(String),
    #[error("only a single leading `exists` block is allowed per alternative")]
    NestedQuantifier,
    #[error("relation application `{0}` must be a top-level conjunct")]
    RelationInFormula(String),
    #[error("pattern for `{constructor}` binds {got} variables, expected {expected}")]
    ArityMismatch { constructor: String, expected: usize, got: usize },
    #[error("malformed semantics: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}")]
pub struct ChcError {
    pub kind: ChcErrorKind,
    pub span: Option<Span>,
}

impl ChcError {
    fn new(kind: ChcErrorKind, span: Option<Span>) -> Self {
        ChcError { kind, span }
    }
}

/// One `match` arm: `((ctor v1 .. vn) alt1 alt2 ..)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchArm {
    pub constructor: String,
    pub bindings: Vec<String>,
    pub alternatives: Vec<SExpr>,
    pub span: Option<Span>,
}

/// The body of one semantic function: a `match` on its term parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticDefinition {
    pub relation: String,
    pub scrutinee: String,
    pub arms: Vec<MatchArm>,
    pub span: Option<Span>,
}

/// Declarations visible to desugaring.
pub struct DesugarContext<'a> {
    pub term_types: &'a [TermTypeDecl],
    pub relations: &'a [SemanticRelation],
}

impl DesugarContext<'_> {
    fn relation(&self, name: &str) -> Option<&SemanticRelation> {
        self.relations.iter().find(|r| r.name == name)
    }

    fn is_term_type(&self, name: &str) -> bool {
        self.term_types.iter().any(|t| t.name == name)
    }

    fn find_constructor(&self, op: &str) -> Option<(&TermTypeDecl, usize)> {
        self.term_types.iter().find_map(|tt| {
            tt.constructors.iter().position(|c| c.operator == op).map(|i| (tt, i))
        })
    }
}

/// Expands semantic definitions into CHCs, arm by arm and alternative by
/// alternative, in source order.
pub fn desugar_semantics(
    definitions: &[SemanticDefinition],
    cx: &DesugarContext<'_>,
) -> Result<Vec<Chc>, ChcError> {
    let mut out = Vec::new();
    for def in definitions {
        out.extend(desugar_definition(def, cx)?);
    }
    Ok(out)
}

fn desugar_definition(def: &SemanticDefinition, cx: &DesugarContext<'_>) -> Result<Vec<Chc>, ChcError> {
    let rel = cx
        .relation(&def.relation)
        .ok_or_else(|| ChcError::new(ChcErrorKind::UnresolvedName(def.relation.clone()), def.span))?;
    let term_param = &rel.params[rel.term_index].0;
    if &def.scrutinee != term_param {
        return Err(ChcError::new(
            ChcErrorKind::Malformed(format!(
                "`{}` matches on `{}` instead of its term parameter `{term_param}`",
                def.relation, def.scrutinee
            )),
            def.span,
        ));
    }
    let term_type = rel.term_type();
    let decl = cx
        .term_types
        .iter()
        .find(|t| t.name == term_type)
        .ok_or_else(|| ChcError::new(ChcErrorKind::UnresolvedName(term_type.to_string()), def.span))?;

    let mut seen = HashSet::new();
    let mut chcs = Vec::new();
    for arm in &def.arms {
        let Some((owner, ci)) = cx.find_constructor(&arm.constructor) else {
            return Err(ChcError::new(ChcErrorKind::UnresolvedName(arm.constructor.clone()), arm.span));
        };
        if owner.name != decl.name {
            return Err(ChcError::new(
                ChcErrorKind::UnknownConstructor {
                    constructor: arm.constructor.clone(),
                    term_type: decl.name.clone(),
                },
                arm.span,
            ));
        }
        if !seen.insert(arm.constructor.clone()) {
            return Err(ChcError::new(ChcErrorKind::DuplicateArm(arm.constructor.clone()), arm.span));
        }
        let ctor = &owner.constructors[ci];
        if ctor.children.len() != arm.bindings.len() {
            return Err(ChcError::new(
                ChcErrorKind::ArityMismatch {
                    constructor: ctor.operator.clone(),
                    expected: ctor.children.len(),
                    got: arm.bindings.len(),
                },
                arm.span,
            ));
        }
        if arm.alternatives.is_empty() {
            return Err(ChcError::new(
                ChcErrorKind::Malformed(format!("arm `{}` has no body", arm.constructor)),
                arm.span,
            ));
        }
        let mut scope: IndexMap<String, Sort> = rel.params.iter().cloned().collect();
        for (v, child_tt) in arm.bindings.iter().zip(&ctor.children) {
            if scope.insert(v.clone(), Sort::Term(child_tt.clone())).is_some() {
                return Err(ChcError::new(
                    ChcErrorKind::Malformed(format!("pattern variable `{v}` shadows a parameter")),
                    arm.span,
                ));
            }
        }
        for alt in &arm.alternatives {
            chcs.push(desugar_alternative(alt, rel, arm, &scope, cx)?);
        }
    }
    let missing: Vec<String> = decl
        .constructors
        .iter()
        .filter(|c| !seen.contains(&c.operator))
        .map(|c| c.operator.clone())
        .collect();
    if !missing.is_empty() {
        return Err(ChcError::new(
            ChcErrorKind::NonExhaustiveMatch { relation: def.relation.clone(), missing },
            def.span,
        ));
    }
    Ok(chcs)
}

fn desugar_alternative(
    alt: &SExpr,
    rel: &SemanticRelation,
    arm: &MatchArm,
    scope: &IndexMap<String, Sort>,
    cx: &DesugarContext<'_>,
) -> Result<Chc, ChcError> {
    let fail = |kind| ChcError::new(kind, arm.span);
    let is_tt = |s: &str| cx.is_term_type(s);
    let (mut auxiliaries, body) = match alt.as_list() {
        Some([SExpr::Symbol(q), vars, body]) if q == "exists" => {
            let vars = parse_sorted_vars(vars, &is_tt).map_err(|e| fail(term_error(e)))?;
            (vars, body)
        }
        _ => (Vec::new(), alt),
    };
    let mut env = scope.clone();
    for (v, s) in &auxiliaries {
        if env.insert(v.clone(), s.clone()).is_some() {
            return Err(fail(ChcErrorKind::Malformed(format!("auxiliary `{v}` shadows a variable"))));
        }
    }
    let conjuncts: Vec<&SExpr> = match body.as_list() {
        Some([SExpr::Symbol(and), rest @ ..]) if and == "and" => rest.iter().collect(),
        _ => vec![body],
    };

    let term_var = &rel.params[rel.term_index].0;
    let mut premises = Vec::new();
    let mut fresh = 0usize;
    let is_rel = |s: &str| cx.relation(s).is_some();
    for c in conjuncts {
        if let Some(head) = c.head().filter(|h| is_rel(h)) {
            let callee = cx.relation(head).unwrap();
            let args = &c.as_list().unwrap()[1..];
            if args.len() != callee.params.len() {
                return Err(fail(ChcErrorKind::IllSorted(format!(
                    "`{head}` applied to {} arguments, expects {}",
                    args.len(),
                    callee.params.len()
                ))));
            }
            let mut names = Vec::with_capacity(args.len());
            let mut pre = Vec::new();
            let mut post = Vec::new();
            let outputs: BTreeSet<usize> =
                callee.output_positions().map(|o| o.iter().copied().collect()).unwrap_or_default();
            let mut term_ref = None;
            for (pos, (arg, (_, want))) in args.iter().zip(&callee.params).enumerate() {
                if pos == callee.term_index {
                    let v = arg.as_symbol().ok_or_else(|| {
                        fail(ChcErrorKind::Malformed(format!("term argument `{arg}` must be a variable")))
                    })?;
                    term_ref = Some(if v == term_var {
                        TermRef::SelfTerm
                    } else if let Some(i) = arm.bindings.iter().position(|b| b == v) {
                        TermRef::Child(i)
                    } else {
                        return Err(fail(ChcErrorKind::UnresolvedName(v.to_string())));
                    });
                    let got = &env[v];
                    if got != want {
                        return Err(fail(ChcErrorKind::IllSorted(format!(
                            "term `{v}` has sort {got}, `{head}` expects {want}"
                        ))));
                    }
                    names.push(v.to_string());
                    continue;
                }
                let t = term_from_sexpr(arg, &is_rel, &is_tt).map_err(|e| fail(term_error(e)))?;
                let got = sort_of(&t, &env, cx, arm.span)?;
                if &got != want {
                    return Err(fail(ChcErrorKind::IllSorted(format!(
                        "argument `{arg}` of `{head}` has sort {got}, expected {want}"
                    ))));
                }
                match t {
                    Term::Var(v) => names.push(v),
                    other => {
                        // non-variable argument: bind it to a fresh auxiliary
                        let name = fresh_name(&env, &mut fresh);
                        env.insert(name.clone(), want.clone());
                        auxiliaries.push((name.clone(), want.clone()));
                        let eq = Premise::Constraint(Term::eq(Term::var(name.clone()), other));
                        if outputs.contains(&pos) {
                            post.push(eq);
                        } else {
                            pre.push(eq);
                        }
                        names.push(name);
                    }
                }
            }
            premises.extend(pre);
            premises.push(Premise::Relation(RelationApp {
                relation: head.to_string(),
                args: names,
                term: term_ref.expect("relations have a term position"),
            }));
            premises.extend(post);
        } else {
            let t = term_from_sexpr(c, &is_rel, &is_tt).map_err(|e| fail(term_error(e)))?;
            if t.has_quantifier() {
                return Err(fail(ChcErrorKind::NestedQuantifier));
            }
            if t.mentions_relation() {
                return Err(fail(ChcErrorKind::RelationInFormula(c.to_string())));
            }
            match sort_of(&t, &env, cx, arm.span)? {
                Sort::Bool => {}
                s => {
                    return Err(fail(ChcErrorKind::IllSorted(format!(
                        "conjunct `{c}` has sort {s}, expected Bool"
                    ))))
                }
            }
            if !t.is_true() {
                premises.push(Premise::Constraint(t));
            }
        }
    }
    Ok(Chc {
        head_relation: rel.name.clone(),
        head_args: rel.params.iter().map(|(n, _)| n.clone()).collect(),
        constructor: arm.constructor.clone(),
        child_vars: arm.bindings.clone(),
        premises,
        auxiliaries,
    })
}

fn fresh_name(env: &IndexMap<String, Sort>, counter: &mut usize) -> String {
    loop {
        let name = format!("_a{counter}");
        *counter += 1;
        if !env.contains_key(&name) {
            return name;
        }
    }
}

fn sort_of(
    t: &Term,
    env: &IndexMap<String, Sort>,
    cx: &DesugarContext<'_>,
    span: Option<Span>,
) -> Result<Sort, ChcError> {
    let sigs: IndexMap<String, Vec<Sort>> =
        cx.relations.iter().map(|r| (r.name.clone(), r.sorts())).collect();
    let senv = SortEnv { vars: env.clone(), relations: Some(&sigs) };
    formula_sort(t, &senv).map_err(|e| {
        let kind = match e {
            SortError::Unbound(v) => ChcErrorKind::UnresolvedName(v),
            SortError::IllSorted { .. } => ChcErrorKind::IllSorted(e.to_string()),
        };
        ChcError::new(kind, span)
    })
}

fn term_error(e: TermError) -> ChcErrorKind {
    match e {
        TermError::UnknownSymbol(s) => ChcErrorKind::UnresolvedName(s),
        TermError::UnknownSort(s) => ChcErrorKind::UnresolvedName(s),
        TermError::Malformed(s) => ChcErrorKind::Malformed(s),
    }
}
