use super::*;
use crate::chc::{Premise, TermRef};

const MUL: &str = include_str!("../../../../benchmarks/semgus/imp-mul.sem");

fn err(text: &str) -> ParseError {
    parse_problem(text).expect_err("should be rejected")
}

fn kind(text: &str) -> AnalysisErrorKind {
    match err(text) {
        ParseError::Analysis(e) => e.kind,
        ParseError::Read(e) => panic!("unexpected read error {e}"),
    }
}

#[test]
fn mul_problem_shape() {
    let p = parse_problem(MUL).unwrap();
    let names: Vec<&str> = p.term_types().iter().map(|t| t.name.as_str()).collect();
    assert_eq!(names, ["F", "S", "E", "B"]);
    let e = p.term_type("E").unwrap();
    let ops: Vec<&str> = e.constructors.iter().map(|c| c.operator.as_str()).collect();
    assert_eq!(ops, ["$r", "$0", "$1", "$x", "$y", "$+", "$-"]);
    assert_eq!(p.constraints().len(), 6);
    assert_eq!(p.target().name, "mul");
    assert_eq!(p.target().term_type, "F");
    assert!(p.target().grammar.is_none());
}

#[test]
fn mul_modes_from_match_annotations() {
    let p = parse_problem(MUL).unwrap();
    let s = p.relation("S.Sem").unwrap();
    assert_eq!(s.input_positions(), Some(&[1, 2, 3][..]));
    assert_eq!(s.output_positions(), Some(&[4, 5, 6][..]));
    assert_eq!(p.relation("F.Sem").unwrap().output_positions(), Some(&[3][..]));
}

#[test]
fn while_arm_gives_two_chcs() {
    let p = parse_problem(MUL).unwrap();
    let whiles: Vec<_> = p.chcs().iter().filter(|c| c.constructor == "$while").collect();
    assert_eq!(whiles.len(), 2);
    let f = whiles[1];
    assert_eq!(f.body_applications().count(), 1);
    let text = f.constraint().to_string();
    for part in ["(= b false)", "(= xo xi)", "(= yo yi)", "(= ro ri)"] {
        assert!(text.contains(part), "{text}");
    }
    let t = whiles[0];
    let terms: Vec<TermRef> = t.body_applications().map(|a| a.term).collect();
    assert_eq!(terms, [TermRef::Child(0), TermRef::Child(1), TermRef::SelfTerm]);
    let s_count = p.chcs().iter().filter(|c| c.head_relation == "S.Sem").count();
    assert_eq!(s_count, 6 + 1);
}

#[test]
fn literal_relation_argument_becomes_auxiliary() {
    let p = parse_problem(MUL).unwrap();
    let f = p.chcs().iter().find(|c| c.constructor == "$function").unwrap();
    assert!(f.auxiliaries.iter().any(|(v, _)| v == "_a0"));
    assert!(matches!(&f.premises[0], Premise::Constraint(t) if t.to_string() == "(= _a0 0)"));
}

#[test]
fn only_check_synth_is_absent_target() {
    assert_eq!(kind("(check-synth)"), AnalysisErrorKind::AbsentSynthTarget);
    assert_eq!(kind(""), AnalysisErrorKind::AbsentSynthTarget);
}

#[test]
fn removed_constructor_is_unresolved() {
    let text = MUL.replacen("($noop) ($seq S S)", "($noop)", 1);
    assert_eq!(kind(&text), AnalysisErrorKind::UnresolvedName("$seq".into()));
}

#[test]
fn missing_check_synth() {
    let text = MUL.replace("(check-synth)", "");
    assert_eq!(kind(&text), AnalysisErrorKind::MissingCheckSynth);
}

#[test]
fn second_synth_fun_is_duplicate() {
    let text = MUL.replace("(synth-fun mul () F)", "(synth-fun mul () F)\n(synth-fun mul2 () F)");
    assert_eq!(kind(&text), AnalysisErrorKind::DuplicateDeclaration("mul2".into()));
}

#[test]
fn unknown_command_is_located() {
    let text = format!("{MUL}\n(frobnicate)");
    match err(&text) {
        ParseError::Analysis(e) => {
            assert_eq!(e.kind, AnalysisErrorKind::UnknownCommand("frobnicate".into()));
            let line = MUL.lines().count() + 2;
            assert_eq!(e.span.unwrap().start.line, line);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn ill_sorted_constraint() {
    let text = MUL.replace("(F.Sem mul 0 0 0)", "(F.Sem mul 0 0 true)");
    assert!(matches!(kind(&text), AnalysisErrorKind::SortMismatch(_)));
}

#[test]
fn nonzero_arity_rejected() {
    let text = MUL.replace("(F 0)", "(F 1)");
    assert_eq!(kind(&text), AnalysisErrorKind::UnsupportedArity("F".into()));
}

#[test]
fn set_commands_become_metadata() {
    let text = format!("(set-info :source |unit test|)\n(set-logic LIA)\n{MUL}");
    let p = parse_problem(&text).unwrap();
    assert_eq!(p.metadata()[0].0, "set-info:source");
    assert_eq!(p.metadata()[1], ("set-logic".to_string(), SExpr::symbol("LIA")));
}

#[test]
fn per_position_annotations() {
    let text = "(declare-term-types ((E 0)) ((($z))))
        (define-funs-rec ((E.Sem ((t E) (x Int :input) (o Int :output)) Bool))
          ((match t ((($z) (= o 0))))))
        (synth-fun f () E) (check-synth)";
    let p = parse_problem(text).unwrap();
    let r = p.relation("E.Sem").unwrap();
    assert_eq!(r.input_positions(), Some(&[1][..]));
    assert_eq!(r.output_positions(), Some(&[2][..]));
}

#[test]
fn single_constructor_true_body() {
    let text = "(declare-term-types ((U 0)) ((($u))))
        (define-funs-rec ((U.Sem ((t U) (x Int)) Bool)) ((match t ((($u) true)))))
        (synth-fun f () U) (check-synth)";
    let p = parse_problem(text).unwrap();
    assert_eq!(p.chcs().len(), 1);
    assert!(p.chcs()[0].premises.is_empty());
    assert!(p.chcs()[0].constraint().is_true());
}

#[test]
fn non_exhaustive_match() {
    let text = MUL.replace("(($1) (= out 1))", "");
    assert!(matches!(
        kind(&text),
        AnalysisErrorKind::Semantics(crate::chc::ChcErrorKind::NonExhaustiveMatch { .. })
    ));
}

#[test]
fn grammar_checked_against_term_types() {
    let text = MUL.replace(
        "(synth-fun mul () F)",
        "(synth-fun mul () F ((Start F) (Stmt S) (Ex E))
           ((Start F (($function Stmt Ex))) (Stmt S ($noop)) (Ex E ($x ($+ Ex Ex) ($< Ex Ex)))))",
    );
    assert!(matches!(kind(&text), AnalysisErrorKind::SortMismatch(_)));
}

#[test]
fn grammar_parsed() {
    let text = MUL.replace(
        "(synth-fun mul () F)",
        "(synth-fun mul () F ((Start F) (Stmt S) (Ex E))
           ((Start F (($function Stmt Ex))) (Stmt S ($noop)) (Ex E ($x ($+ Ex Ex)))))",
    );
    let p = parse_problem(&text).unwrap();
    let g = p.target().grammar.as_ref().unwrap();
    assert_eq!(g.nonterminals[0], ("Start".to_string(), "F".to_string()));
    assert_eq!(g.rules["Ex"].len(), 2);
}

#[test]
fn source_printer_round_trips() {
    let p = parse_problem(MUL).unwrap();
    let printed = to_semgus_source(p.parts());
    let q = parse_problem(&printed).unwrap();
    assert_eq!(p, q);
}

#[test]
fn json_events_for_term_types() {
    let p = parse_problem(MUL).unwrap();
    let doc = to_json(&p);
    let events = doc.as_array().unwrap();
    assert_eq!(events[0]["$version"], "1.0");
    let count = |tag: &str| events.iter().filter(|e| e["$event"] == tag).count();
    assert_eq!(count("declare-term-type"), 4);
    let e_ctors = events
        .iter()
        .filter(|e| e["$event"] == "define-constructor" && e["term-type"] == "E")
        .count();
    assert_eq!(e_ctors, 7);
    assert_eq!(count("chc"), p.chcs().len());
    assert_eq!(count("constraint"), 6);
    assert_eq!(count("check-synth"), 1);
}

#[test]
fn analysis_is_deterministic() {
    assert_eq!(parse_problem(MUL).unwrap(), parse_problem(MUL).unwrap());
}
