//! Event-tagged JSON export.
//!
//! The document is one array. A header object `{"$version": "1.0", ...}`
//! comes first (carrying metadata and declared variables), followed by
//! events tagged with `"$event"`: `declare-term-type`, `define-constructor`,
//! `declare-semantics-relation`, `chc`, `synth-fun`, `constraint` and
//! `check-synth`. Formulas and sorts are nested arrays mirroring their
//! s-expression form. Atoms that JSON cannot carry directly are tagged
//! objects: `{"$int": "..."}` for numerals of magnitude at least 2^53,
//! `{"$str": ...}`, `{"$bv": "#x.."}` and `{"$kw": ...}`.

use serde_json::{json, Map, Value};

use crate::chc::{Chc, Premise, TermRef};
use crate::formula::Sort;
use crate::sexpr::SExpr;

use super::{Grammar, ProblemParts, SynthesisProblem};

pub const JSON_VERSION: &str = "1.0";

const SAFE_INT: u64 = 1 << 53;

pub fn to_json(problem: &SynthesisProblem) -> Value {
    parts_to_json(problem.parts())
}

pub fn parts_to_json(parts: &ProblemParts) -> Value {
    if *parts == ProblemParts::default() {
        return Value::Array(Vec::new());
    }
    let mut events = vec![json!({
        "$version": JSON_VERSION,
        "metadata": parts.metadata.iter().map(|(k, v)| json!([k, sexpr_json(v)])).collect::<Vec<_>>(),
        "declared-vars": parts.declared_vars.iter().map(|(v, s)| json!([v, sort_json(s)])).collect::<Vec<_>>(),
    })];
    for tt in &parts.term_types {
        events.push(json!({"$event": "declare-term-type", "name": tt.name, "arity": tt.arity}));
    }
    for tt in &parts.term_types {
        for c in &tt.constructors {
            events.push(json!({
                "$event": "define-constructor",
                "term-type": tt.name,
                "name": c.operator,
                "children": c.children,
            }));
        }
    }
    for r in &parts.relations {
        let modes = r.modes.as_ref();
        events.push(json!({
            "$event": "declare-semantics-relation",
            "name": r.name,
            "params": r.params.iter().map(|(n, s)| json!([n, sort_json(s)])).collect::<Vec<_>>(),
            "term-index": r.term_index,
            "inputs": modes.map(|m| json!(m.inputs)).unwrap_or(Value::Null),
            "outputs": modes.map(|m| json!(m.outputs)).unwrap_or(Value::Null),
        }));
    }
    for chc in &parts.chcs {
        events.push(chc_json(chc));
    }
    if let Some(t) = &parts.target {
        events.push(json!({
            "$event": "synth-fun",
            "name": t.name,
            "term-type": t.term_type,
            "grammar": t.grammar.as_ref().map(grammar_json).unwrap_or(Value::Null),
        }));
    }
    for c in &parts.constraints {
        events.push(json!({"$event": "constraint", "formula": sexpr_json(&c.to_sexpr())}));
    }
    if parts.check_synth {
        events.push(json!({"$event": "check-synth"}));
    }
    Value::Array(events)
}

fn chc_json(chc: &Chc) -> Value {
    let premises: Vec<Value> = chc
        .premises
        .iter()
        .map(|p| match p {
            Premise::Relation(app) => json!({
                "relation": app.relation,
                "args": app.args,
                "term": match app.term {
                    TermRef::SelfTerm => json!("self"),
                    TermRef::Child(i) => json!(i),
                },
            }),
            Premise::Constraint(t) => json!({"constraint": sexpr_json(&t.to_sexpr())}),
        })
        .collect();
    json!({
        "$event": "chc",
        "head": {"relation": chc.head_relation, "args": chc.head_args},
        "constructor": chc.constructor,
        "children": chc.child_vars,
        "auxiliaries": chc.auxiliaries.iter().map(|(v, s)| json!([v, sort_json(s)])).collect::<Vec<_>>(),
        "premises": premises,
    })
}

fn grammar_json(g: &Grammar) -> Value {
    json!({
        "nonterminals": g.nonterminals.iter().map(|(n, t)| json!([n, t])).collect::<Vec<_>>(),
        "rules": g.rules.iter().map(|(nt, prods)| json!({
            "nonterminal": nt,
            "productions": prods.iter().map(|p| json!({
                "constructor": p.constructor,
                "children": p.children,
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

fn sort_json(s: &Sort) -> Value {
    sexpr_json(&s.to_sexpr())
}

pub(crate) fn sexpr_json(e: &SExpr) -> Value {
    match e {
        SExpr::Symbol(s) => Value::String(s.clone()),
        SExpr::Numeral(n) => match u64::try_from(n) {
            Ok(v) if v < SAFE_INT => json!(v),
            _ => json!({"$int": n.to_string()}),
        },
        SExpr::StringLit(s) => json!({"$str": s}),
        SExpr::BitVecLit { .. } => json!({"$bv": e.to_string()}),
        SExpr::BoolLit(b) => Value::Bool(*b),
        SExpr::Keyword(k) => json!({"$kw": k}),
        SExpr::List(items) => Value::Array(items.iter().map(sexpr_json).collect()),
    }
}

/// Inverse of the atom encoding used in formulas and sorts.
pub fn sexpr_from_json(v: &Value) -> Option<SExpr> {
    Some(match v {
        Value::String(s) => SExpr::Symbol(s.clone()),
        Value::Number(n) => SExpr::num(n.as_u64()?),
        Value::Bool(b) => SExpr::BoolLit(*b),
        Value::Array(items) => {
            SExpr::List(items.iter().map(sexpr_from_json).collect::<Option<_>>()?)
        }
        Value::Object(m) => tagged_atom(m)?,
        Value::Null => return None,
    })
}

fn tagged_atom(m: &Map<String, Value>) -> Option<SExpr> {
    let (tag, val) = m.iter().next().filter(|_| m.len() == 1)?;
    let s = val.as_str()?;
    Some(match tag.as_str() {
        "$int" => SExpr::Numeral(s.parse().ok()?),
        "$str" => SExpr::StringLit(s.to_string()),
        "$kw" => SExpr::Keyword(s.to_string()),
        "$bv" => {
            let mut read = crate::sexpr::read_sexprs(s).ok()?;
            match read.pop() {
                Some(bv @ SExpr::BitVecLit { .. }) if read.is_empty() => bv,
                _ => return None,
            }
        }
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use num_bigint::BigUint;

    use super::*;

    #[test]
    fn large_numerals_are_tagged() {
        let big = SExpr::Numeral(BigUint::from(1u64 << 53));
        assert_eq!(sexpr_json(&big), json!({"$int": "9007199254740992"}));
        assert_eq!(sexpr_json(&SExpr::num(42)), json!(42));
        assert_eq!(sexpr_from_json(&sexpr_json(&big)), Some(big));
    }

    #[test]
    fn atoms_round_trip() {
        for e in [
            SExpr::StringLit("a\"b".into()),
            SExpr::BitVecLit { width: 8, value: BigUint::from(255u32) },
            SExpr::Keyword("input".into()),
            SExpr::BoolLit(false),
            SExpr::list([SExpr::symbol("+"), SExpr::num(1), SExpr::symbol("x")]),
        ] {
            assert_eq!(sexpr_from_json(&sexpr_json(&e)), Some(e));
        }
    }

    #[test]
    fn empty_problem_is_empty_array() {
        assert_eq!(parts_to_json(&ProblemParts::default()), json!([]));
    }
}
