use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semgus"))
}

fn bench(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const MUL_SOLUTION: &str = "($function ($while ($< $0 $y) ($seq ($y<- ($- $y $1)) ($r<- ($+ $r $x)))) $r)";

#[test]
fn parse_prints_json_events() {
    let o = run(&["parse", s(&bench("semgus/imp-mul.sem"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let events = doc.as_array().unwrap();
    assert_eq!(events[0]["$version"], "1.0");
    assert!(events.iter().any(|e| e["$event"] == "chc"));
}

#[test]
fn parse_sexpr_reparses() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["parse", "--format", "sexpr", s(&bench("semgus/imp-mul.sem"))]);
    assert_eq!(code(&o), 0);
    let f = dir.path().join("again.sem");
    fs::write(&f, stdout(&o)).unwrap();
    let o2 = run(&["parse", "--format", "sexpr", s(&f)]);
    assert_eq!(code(&o2), 0, "{}", stderr(&o2));
    assert_eq!(stdout(&o2), stdout(&o));
}

#[test]
fn parse_errors_are_located() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.sem");
    fs::write(&empty, "").unwrap();
    let o = run(&["parse", s(&empty)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("synth-fun"), "{}", stderr(&o));

    let text = fs::read_to_string(bench("semgus/imp-mul.sem")).unwrap();
    // drop the closing paren of the last constraint
    let cut = text.rfind("12))").unwrap() + 3;
    let broken = dir.path().join("broken.sem");
    fs::write(&broken, format!("{}{}", &text[..cut], &text[cut + 1..])).unwrap();
    let o = run(&["parse", s(&broken)]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    let line = text[..text.rfind("(constraint (F.Sem mul 3 4 12").unwrap()].lines().count() + 1;
    assert!(err.starts_with(&format!("{}:{line}:1:", s(&broken))), "{err}");
}

#[test]
fn solve_prints_definition_that_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let problem = bench("semgus/arith-linear.sem");
    let o = run(&["solve", s(&problem), "--solver", "bottom-up-size"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("((define-fun f () E "), "{text}");
    let cand = dir.path().join("sol.txt");
    fs::write(&cand, &text).unwrap();
    let v = run(&["verify", s(&problem), "--candidate", s(&cand)]);
    assert_eq!(code(&v), 0, "{}", stdout(&v));
    let v = run(&["verify", s(&problem), "--candidate", s(&cand), "--mode", "logical"]);
    assert_eq!(code(&v), 0, "{}", stdout(&v));
}

#[test]
fn solve_exit_codes() {
    let o = run(&["solve", s(&bench("semgus/imp-mul.sem")), "--timeout", "0.001"]);
    assert_eq!(code(&o), 3);
    // a finite grammar with no program meeting the examples
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("unsat.sem");
    fs::write(
        &f,
        "(declare-term-types ((E 0)) ((($x) ($0))))
         (define-funs-rec ((E.Sem ((t E) (x Int) (out Int)) Bool))
           ((! (match t ((($x) (= out x)) (($0) (= out 0)))) :input (x) :output (out))))
         (synth-fun f () E)
         (constraint (E.Sem f 1 2))
         (check-synth)",
    )
    .unwrap();
    for strategy in ["top-down", "bottom-up-size", "bottom-up-height"] {
        let o = run(&["solve", s(&f), "--solver", strategy]);
        assert_eq!(code(&o), 2, "{strategy}: {}", stdout(&o));
    }
    let o = run(&["solve", s(&bench("semgus/arith-unsat.sem")), "--max-level", "5"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn solve_accepts_sygus_input() {
    let o = run(&["solve", s(&bench("sygus/lia-plus-one.sl"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("define-fun f () S"));
}

#[test]
fn verify_examples_and_refutation() {
    let dir = tempfile::tempdir().unwrap();
    let mul = bench("semgus/imp-mul.sem");
    let good = dir.path().join("good.txt");
    fs::write(&good, MUL_SOLUTION).unwrap();
    let o = run(&["verify", s(&mul), "--candidate", s(&good)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "($function $noop $r)").unwrap();
    let o = run(&["verify", s(&mul), "--candidate", s(&bad)]);
    assert_eq!(code(&o), 5);
    // example 0 is mul(0, 0) = 0, which `$r` meets
    assert!(stdout(&o).contains("example 1"), "{}", stdout(&o));
    let hole = dir.path().join("hole.txt");
    fs::write(&hole, "($function (?? S) $r)").unwrap();
    let o = run(&["verify", s(&mul), "--candidate", s(&hole)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("IncompleteTerm"));
}

#[test]
fn verify_logical_prints_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "($fn ($r<- $x))").unwrap();
    let o = run(&["verify", s(&bench("semgus/imp-max2.sem")), "--candidate", s(&bad), "--mode", "logical"]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).contains("counterexample"), "{}", stdout(&o));
    // examples mode cannot decide universal constraints
    let o = run(&["verify", s(&bench("semgus/imp-max2.sem")), "--candidate", s(&bad)]);
    assert_eq!(code(&o), 4);
}

#[test]
fn translate_both_directions() {
    let dir = tempfile::tempdir().unwrap();
    let sem = dir.path().join("t.sem");
    let o = run(&["translate", s(&bench("sygus/lia-max2.sl")), "--direction", "sygus2semgus", "--out", s(&sem)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&run(&["parse", s(&sem)])), 0);
    let o = run(&["translate", s(&sem), "--direction", "semgus2sygus"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        semgus::sygus::parse_sygus(&stdout(&o)).unwrap(),
        semgus::sygus::parse_sygus(&fs::read_to_string(bench("sygus/lia-max2.sl")).unwrap()).unwrap()
    );
    let o = run(&["translate", s(&bench("semgus/imp-mul.sem")), "--direction", "semgus2sygus"]);
    assert_eq!(code(&o), 6);
    assert!(stderr(&o).contains("NotInFragment"));
}

#[test]
fn bench_writes_csv_and_cactus() {
    let dir = tempfile::tempdir().unwrap();
    let problems = dir.path().join("problems");
    fs::create_dir(&problems).unwrap();
    for name in ["arith-sum3.sem", "bool-implies.sem"] {
        fs::copy(bench(&format!("semgus/{name}")), problems.join(name)).unwrap();
    }
    fs::write(problems.join("broken.sem"), "(synth-fun").unwrap();
    let out = dir.path().join("report.csv");
    let o = run(&["bench", s(&problems), "--solver", "top-down", "--repeat", "3", "--timeout", "30", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["path", "strategy", "status", "median_seconds", "candidates", "evals_per_sec", "cex_count"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let statuses: Vec<&str> = rows.iter().map(|r| &r[2]).collect();
    assert_eq!(statuses, ["solved", "solved", "error"]);
    let cactus = fs::read_to_string(dir.path().join("cactus.dat")).unwrap();
    let counts: Vec<&str> = cactus.lines().map(|l| l.split_whitespace().nth(1).unwrap()).collect();
    assert_eq!(counts, ["1", "2"]);
}
