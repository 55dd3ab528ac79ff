use std::fs;
use std::path::PathBuf;

use semgus::problem::parse_problem;
use semgus::sygus::{parse_sygus, print_sygus, semgus_to_sygus, sygus_to_semgus};

fn corpus() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks/sygus");
    let mut files: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

#[test]
fn ten_problems_round_trip() {
    let files = corpus();
    assert_eq!(files.len(), 10);
    for f in files {
        let p = parse_sygus(&fs::read_to_string(&f).unwrap()).unwrap();
        let s = sygus_to_semgus(&p).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        let back = semgus_to_sygus(&s).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        assert_eq!(back, p, "{}", f.display());
        assert_eq!(parse_sygus(&print_sygus(&back)).unwrap(), p);
        // the SemGuS text re-reads to the same problem
        let text = semgus::problem::to_semgus_source(s.parts());
        let again = parse_problem(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", f.display()));
        assert_eq!(semgus_to_sygus(&again).unwrap(), p);
    }
}

#[test]
fn multi_output_semantics_is_not_in_fragment() {
    let text = fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks/semgus/imp-mul.sem"))
        .unwrap();
    let e = semgus_to_sygus(&parse_problem(&text).unwrap()).unwrap_err();
    assert!(e.reason.contains("outputs"), "{e}");
}
