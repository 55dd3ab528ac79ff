//! Printing a problem back to SemGuS source.

use indexmap::IndexMap;

use crate::chc::{Chc, Premise};
use crate::formula::{sorted_vars_sexpr, Builtin, Op, Term};
use crate::sexpr::SExpr;

use super::{Grammar, ProblemParts};

fn sym(s: &str) -> SExpr {
    SExpr::symbol(s)
}

/// Renders the problem as SemGuS commands, one per line. Analyzing the
/// output yields an equal problem.
pub fn to_semgus_source(parts: &ProblemParts) -> String {
    let mut out = String::new();
    for cmd in commands(parts) {
        out.push_str(&cmd.to_string());
        out.push('\n');
    }
    out
}

pub fn commands(parts: &ProblemParts) -> Vec<SExpr> {
    let mut cmds = Vec::new();
    for (key, value) in &parts.metadata {
        cmds.push(metadata_command(key, value));
    }
    if !parts.term_types.is_empty() {
        let decls = parts
            .term_types
            .iter()
            .map(|t| SExpr::list([sym(&t.name), SExpr::num(u64::from(t.arity))]));
        let ctors = parts.term_types.iter().map(|t| {
            SExpr::list(t.constructors.iter().map(|c| {
                SExpr::list(std::iter::once(sym(&c.operator)).chain(c.children.iter().map(|s| sym(s))))
            }))
        });
        cmds.push(SExpr::list([
            sym("declare-term-types"),
            SExpr::list(decls),
            SExpr::list(ctors),
        ]));
    }
    if !parts.relations.is_empty() {
        let sigs = parts.relations.iter().map(|r| {
            SExpr::list([
                sym(&r.name),
                sorted_vars_sexpr(&r.params),
                sym("Bool"),
            ])
        });
        let bodies = parts.relations.iter().map(|r| {
            let chcs: Vec<&Chc> = parts.chcs.iter().filter(|c| c.head_relation == r.name).collect();
            let body = match_body(&r.params[r.term_index].0, &chcs);
            match &r.modes {
                None => body,
                Some(m) => {
                    let names = |ix: &[usize]| SExpr::list(ix.iter().map(|&i| sym(&r.params[i].0)));
                    SExpr::list([
                        sym("!"),
                        body,
                        SExpr::Keyword("input".into()),
                        names(&m.inputs),
                        SExpr::Keyword("output".into()),
                        names(&m.outputs),
                    ])
                }
            }
        });
        cmds.push(SExpr::list([sym("define-funs-rec"), SExpr::list(sigs), SExpr::list(bodies)]));
    }
    if let Some(t) = &parts.target {
        let mut c = vec![sym("synth-fun"), sym(&t.name), SExpr::List(vec![]), sym(&t.term_type)];
        if let Some(g) = &t.grammar {
            c.extend(grammar_sexprs(g));
        }
        cmds.push(SExpr::List(c));
    }
    for (v, s) in &parts.declared_vars {
        cmds.push(SExpr::list([sym("declare-var"), sym(v), s.to_sexpr()]));
    }
    for c in &parts.constraints {
        cmds.push(SExpr::list([sym("constraint"), c.to_sexpr()]));
    }
    if parts.check_synth {
        cmds.push(SExpr::list([sym("check-synth")]));
    }
    cmds
}

fn metadata_command(key: &str, value: &SExpr) -> SExpr {
    match key.split_once(':') {
        Some((cmd, kw)) => {
            let mut items = vec![sym(cmd), SExpr::Keyword(kw.to_string())];
            if *value != SExpr::List(vec![]) {
                items.push(value.clone());
            }
            SExpr::List(items)
        }
        None => SExpr::list([sym(key), value.clone()]),
    }
}

fn match_body(scrutinee: &str, chcs: &[&Chc]) -> SExpr {
    let mut arms: IndexMap<&str, Vec<&Chc>> = IndexMap::new();
    for c in chcs {
        arms.entry(c.constructor.as_str()).or_default().push(c);
    }
    let arms = arms.into_iter().map(|(ctor, alts)| {
        let pattern = SExpr::list(
            std::iter::once(sym(ctor)).chain(alts[0].child_vars.iter().map(|v| sym(v))),
        );
        SExpr::list(std::iter::once(pattern).chain(alts.iter().map(|c| alternative(c))))
    });
    SExpr::list([sym("match"), sym(scrutinee), SExpr::list(arms)])
}

fn alternative(chc: &Chc) -> SExpr {
    let mut conjuncts: Vec<SExpr> = chc
        .premises
        .iter()
        .map(|p| match p {
            Premise::Relation(app) => {
                SExpr::list(std::iter::once(sym(&app.relation)).chain(app.args.iter().map(|a| sym(a))))
            }
            Premise::Constraint(t) => t.to_sexpr(),
        })
        .collect();
    let body = match conjuncts.len() {
        0 => SExpr::BoolLit(true),
        1 => {
            // a lone conjunction would be split into several premises on re-read
            if matches!(&chc.premises[0], Premise::Constraint(Term::App(Op::Builtin(Builtin::And), _))) {
                conjuncts.push(SExpr::BoolLit(true));
                SExpr::list(std::iter::once(sym("and")).chain(conjuncts))
            } else {
                conjuncts.pop().unwrap()
            }
        }
        _ => SExpr::list(std::iter::once(sym("and")).chain(conjuncts)),
    };
    if chc.auxiliaries.is_empty() {
        body
    } else {
        SExpr::list([sym("exists"), sorted_vars_sexpr(&chc.auxiliaries), body])
    }
}

fn grammar_sexprs(g: &Grammar) -> [SExpr; 2] {
    let decls = g.nonterminals.iter().map(|(n, t)| SExpr::list([sym(n), sym(t)]));
    let rules = g.nonterminals.iter().map(|(n, t)| {
        let prods = g.rules.get(n).into_iter().flatten().map(|p| {
            if p.children.is_empty() {
                sym(&p.constructor)
            } else {
                SExpr::list(std::iter::once(sym(&p.constructor)).chain(p.children.iter().map(|c| sym(c))))
            }
        });
        SExpr::list([sym(n), sym(t), SExpr::list(prods)])
    });
    [SExpr::list(decls), SExpr::list(rules)]
}
