//! Reads the exported IR back independently and compares it with the
//! analyzed problem.

use std::fs;
use std::path::PathBuf;

use serde_json::Value;

use semgus::chc::Premise;
use semgus::problem::{parse_problem, sexpr_from_json, to_json, to_semgus_source, SynthesisProblem, JSON_VERSION};

fn corpus() -> Vec<(PathBuf, SynthesisProblem)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks/semgus");
    let mut files: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.into_iter().map(|f| {
        let p = parse_problem(&fs::read_to_string(&f).unwrap()).unwrap();
        (f, p)
    }).collect()
}

fn events<'a>(doc: &'a [Value], tag: &str) -> Vec<&'a Value> {
    doc.iter().filter(|e| e["$event"] == tag).collect()
}

#[test]
fn json_events_mirror_the_problem() {
    for (f, p) in corpus() {
        let doc = to_json(&p);
        let doc = doc.as_array().unwrap();
        assert_eq!(doc[0]["$version"], JSON_VERSION, "{}", f.display());
        assert_eq!(events(doc, "declare-term-type").len(), p.term_types().len());
        let ctors: usize = p.term_types().iter().map(|t| t.constructors.len()).sum();
        assert_eq!(events(doc, "define-constructor").len(), ctors);
        assert_eq!(events(doc, "declare-semantics-relation").len(), p.relations().len());
        let chcs = events(doc, "chc");
        assert_eq!(chcs.len(), p.chcs().len());
        for (j, c) in chcs.iter().zip(p.chcs()) {
            assert_eq!(j["constructor"], c.constructor.as_str());
            assert_eq!(j["head"]["relation"], c.head_relation.as_str());
            for (jp, cp) in j["premises"].as_array().unwrap().iter().zip(&c.premises) {
                match cp {
                    Premise::Constraint(t) => {
                        assert_eq!(sexpr_from_json(&jp["constraint"]), Some(t.to_sexpr()));
                    }
                    Premise::Relation(app) => assert_eq!(jp["relation"], app.relation.as_str()),
                }
            }
        }
        let cons = events(doc, "constraint");
        assert_eq!(cons.len(), p.constraints().len());
        for (j, c) in cons.iter().zip(p.constraints()) {
            assert_eq!(sexpr_from_json(&j["formula"]), Some(c.to_sexpr()));
        }
        assert_eq!(events(doc, "synth-fun")[0]["name"], p.target().name.as_str());
        assert_eq!(events(doc, "check-synth").len(), 1);
    }
}

#[test]
fn canonical_source_reparses_to_the_same_problem() {
    for (f, p) in corpus() {
        let text = to_semgus_source(p.parts());
        let again = parse_problem(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", f.display()));
        assert_eq!(again.parts(), p.parts(), "{}", f.display());
        assert_eq!(to_semgus_source(again.parts()), text);
    }
}
