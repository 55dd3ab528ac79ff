//! `semgus`: parse, solve, verify, translate and benchmark SemGuS problems.

mod bench;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use semgus::enumerate::{solve_with, BudgetKind, Limits, SolveOutcome, SolveReport, Strategy};
use semgus::eval::{extract_examples, run_examples, EvalMode, Evaluator, ExampleResult, DEFAULT_FUEL};
use semgus::operational::operationalize_all;
use semgus::problem::{parse_problem, to_json, to_semgus_source, SynthesisProblem};
use semgus::program::{parse_term, ProgramTerm};
use semgus::sygus::{parse_sygus, print_sygus, semgus_to_sygus, sygus_to_semgus};
use semgus::verify::{verify_logical, Check, SolverConfig, SpecChecker, VerificationResult};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_EXHAUSTED: u8 = 2;
pub const EXIT_TIMEOUT: u8 = 3;
pub const EXIT_INCONCLUSIVE: u8 = 4;
pub const EXIT_REFUTED: u8 = 5;
pub const EXIT_NOT_IN_FRAGMENT: u8 = 6;

#[derive(Parser)]
#[command(name = "semgus", version, about = "Semantics-guided synthesis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Sexpr,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyMode {
    Examples,
    Logical,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    #[value(name = "sygus2semgus")]
    SygusToSemgus,
    #[value(name = "semgus2sygus")]
    SemgusToSygus,
}

#[derive(clap::Args, Clone)]
struct RunArgs {
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Instructions one evaluation may execute.
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    /// SMT solver executable (default: $SEMGUS_SMT_SOLVER or z3).
    #[arg(long)]
    smt_solver: Option<PathBuf>,
    /// Reject nondeterministic semantics instead of taking the first match.
    #[arg(long)]
    strict_eval: bool,
    /// Stop after this many candidates.
    #[arg(long)]
    max_candidates: Option<u64>,
    /// Largest size (or height) to enumerate.
    #[arg(long)]
    max_level: Option<usize>,
    /// Soft memory cap: partial programs queued or terms banked.
    #[arg(long)]
    max_live: Option<usize>,
}

impl RunArgs {
    fn limits(&self) -> Limits {
        Limits {
            max_candidates: self.max_candidates,
            max_level: self.max_level,
            timeout: self.timeout.map(Duration::from_secs_f64),
            max_live: self.max_live,
            fuel: self.fuel,
            mode: if self.strict_eval { EvalMode::Strict } else { EvalMode::FirstMatch },
        }
    }

    fn solver(&self) -> SolverConfig {
        match &self.smt_solver {
            Some(p) => SolverConfig::for_executable(p),
            None => SolverConfig::default(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a problem and print it as JSON or canonical SemGuS.
    Parse {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Print the evaluation plans to standard error.
        #[arg(long)]
        dump_plans: bool,
    },
    /// Synthesize a program for the problem.
    Solve {
        file: PathBuf,
        #[arg(long, default_value = "top-down")]
        solver: Strategy,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check a candidate program against the problem.
    Verify {
        file: PathBuf,
        /// File holding the candidate term.
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long, value_enum, default_value = "examples")]
        mode: VerifyMode,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Convert between SyGuS and SemGuS.
    Translate {
        file: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve every problem in a directory and write a CSV report.
    Bench {
        dir: PathBuf,
        /// Strategies to run (repeatable; default: all three).
        #[arg(long)]
        solver: Vec<Strategy>,
        /// Per-run time limit in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        /// Runs per benchmark; the median time is reported.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        #[arg(long)]
        smt_solver: Option<PathBuf>,
        #[arg(long)]
        max_live: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

/// A problem load failure, already printed as a located diagnostic.
#[derive(Debug)]
pub struct Reported;

/// Reads a `.sl` (SyGuS) or SemGuS file, printing `path:line:col: msg`
/// diagnostics on failure.
pub fn load_problem(path: &Path) -> Result<std::result::Result<SynthesisProblem, Reported>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let shown = path.display();
    if path.extension().is_some_and(|e| e == "sl") {
        let r = parse_sygus(&text).map_err(semgus::sygus::TranslateError::from).and_then(|p| sygus_to_semgus(&p));
        return Ok(r.map_err(|e| {
            eprintln!("{shown}: {e}");
            Reported
        }));
    }
    Ok(parse_problem(&text).map_err(|e| {
        match e.location() {
            // the message already starts with line:col
            Some(_) => eprintln!("{shown}:{e}"),
            None => eprintln!("{shown}: {e}"),
        }
        Reported
    }))
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Parse { file, format, dump_plans } => {
            let Ok(p) = load_problem(&file)? else { return Ok(EXIT_ERROR) };
            if dump_plans {
                let table = operationalize_all(&p);
                for plan in table.plans.values().flatten() {
                    eprintln!("{plan}");
                }
                for (i, e) in &table.errors {
                    eprintln!("CHC {i}: {e}");
                }
            }
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&to_json(&p))?),
                Format::Sexpr => print!("{}", to_semgus_source(p.parts())),
            }
            Ok(EXIT_OK)
        }
        Command::Solve { file, solver, run } => {
            let Ok(p) = load_problem(&file)? else { return Ok(EXIT_ERROR) };
            let report = match solve_with(&p, solver, &run.limits(), &run.solver()) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    return Ok(EXIT_ERROR);
                }
            };
            Ok(report_solution(&p, &report))
        }
        Command::Verify { file, candidate, mode, run } => {
            let Ok(p) = load_problem(&file)? else { return Ok(EXIT_ERROR) };
            let text = fs::read_to_string(&candidate)
                .with_context(|| format!("cannot read {}", candidate.display()))?;
            let term = match parse_term(&p, &text, &p.target().term_type) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{}: {e}", candidate.display());
                    return Ok(EXIT_ERROR);
                }
            };
            if !term.is_complete() {
                eprintln!("{}: IncompleteTerm: the candidate contains holes", candidate.display());
                return Ok(EXIT_ERROR);
            }
            match mode {
                VerifyMode::Examples => verify_examples(&p, &term, &run),
                VerifyMode::Logical => {
                    let mut cfg = run.solver();
                    if let Some(t) = run.timeout {
                        cfg.time_limit = Duration::from_secs_f64(t);
                    }
                    Ok(match verify_logical(&term, &p, &cfg)? {
                        VerificationResult::Verified => {
                            println!("verified");
                            EXIT_OK
                        }
                        VerificationResult::Refuted(cex) if cex.is_empty() => {
                            println!("refuted: a ground constraint fails");
                            EXIT_REFUTED
                        }
                        VerificationResult::Refuted(cex) => {
                            let parts: Vec<String> = cex.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                            println!("refuted: counterexample {}", parts.join(", "));
                            EXIT_REFUTED
                        }
                        VerificationResult::Inconclusive(r) => {
                            println!("inconclusive: {r}");
                            EXIT_INCONCLUSIVE
                        }
                    })
                }
            }
        }
        Command::Translate { file, direction, out } => {
            let text = fs::read_to_string(&file).with_context(|| format!("cannot read {}", file.display()))?;
            let shown = file.display();
            let doc = match direction {
                Direction::SygusToSemgus => {
                    let translated = parse_sygus(&text)
                        .map_err(semgus::sygus::TranslateError::from)
                        .and_then(|s| sygus_to_semgus(&s));
                    match translated {
                        Ok(p) => to_semgus_source(p.parts()),
                        Err(e) => {
                            eprintln!("{shown}: {e}");
                            return Ok(EXIT_ERROR);
                        }
                    }
                }
                Direction::SemgusToSygus => {
                    let Ok(p) = load_problem(&file)? else { return Ok(EXIT_ERROR) };
                    match semgus_to_sygus(&p) {
                        Ok(s) => print_sygus(&s),
                        Err(e) => {
                            match e.chc {
                                Some(i) => eprintln!("{shown}: NotInFragment (CHC {i}): {}", e.reason),
                                None => eprintln!("{shown}: NotInFragment: {}", e.reason),
                            }
                            return Ok(EXIT_NOT_IN_FRAGMENT);
                        }
                    }
                }
            };
            match out {
                Some(path) => fs::write(&path, doc).with_context(|| format!("cannot write {}", path.display()))?,
                None => print!("{doc}"),
            }
            Ok(EXIT_OK)
        }
        Command::Bench { dir, solver, timeout, repeat, out, fuel, smt_solver, max_live } => {
            let strategies = if solver.is_empty() { Strategy::ALL.to_vec() } else { solver };
            let limits = Limits {
                timeout: Some(Duration::from_secs_f64(timeout)),
                max_live,
                fuel,
                ..Limits::default()
            };
            let cfg = smt_solver.map_or_else(SolverConfig::default, SolverConfig::for_executable);
            bench::run(&dir, &strategies, &limits, &cfg, repeat.max(1), &out)?;
            Ok(EXIT_OK)
        }
    }
}

/// Exit code for a solve outcome.
pub fn outcome_code(o: &SolveOutcome) -> u8 {
    match o {
        SolveOutcome::Solution(_) => EXIT_OK,
        SolveOutcome::Exhausted | SolveOutcome::Budget(BudgetKind::Candidates | BudgetKind::Level | BudgetKind::Memory) => {
            EXIT_EXHAUSTED
        }
        SolveOutcome::Budget(BudgetKind::Time) => EXIT_TIMEOUT,
        SolveOutcome::Inconclusive(_) => EXIT_INCONCLUSIVE,
    }
}

/// `((define-fun name () T term))`, the shape solutions are printed in.
pub fn solution_text(p: &SynthesisProblem, t: &ProgramTerm) -> String {
    let target = p.target();
    format!("((define-fun {} () {} {}))", target.name, target.term_type, t.display(p))
}

fn report_solution(p: &SynthesisProblem, r: &SolveReport) -> u8 {
    let s = &r.stats;
    eprintln!(
        "{} candidates, {} evaluations, {} counterexamples, {:.3}s",
        s.candidates,
        s.evaluations,
        s.counterexamples.len(),
        s.elapsed.as_secs_f64()
    );
    match &r.outcome {
        SolveOutcome::Solution(t) => println!("{}", solution_text(p, t)),
        SolveOutcome::Exhausted => println!("exhausted: no program in the grammar meets the constraints"),
        SolveOutcome::Budget(b) => println!("gave up: {b:?} budget reached"),
        SolveOutcome::Inconclusive(why) => println!("inconclusive: {why}"),
    }
    outcome_code(&r.outcome)
}

fn verify_examples(p: &SynthesisProblem, term: &ProgramTerm, run: &RunArgs) -> Result<u8> {
    let limits = run.limits();
    let evaluator = Evaluator::new(p);
    let (examples, residual) = extract_examples(p);
    if let ExampleResult::Fail { index, got } = run_examples(&evaluator, term, &examples, limits.fuel, limits.mode) {
        let ex = &examples[index];
        let got = match got {
            Ok(o) => format!("{o:?}"),
            Err(e) => e.to_string(),
        };
        println!("refuted: example {index} (constraint {}) failed, got {got}", ex.constraint);
        return Ok(EXIT_REFUTED);
    }
    let checker = SpecChecker::new(&evaluator, limits.fuel, limits.mode);
    let mut undecided = 0;
    for &k in &residual {
        if !checker.shape().ground.contains(&k) {
            undecided += 1;
            continue;
        }
        match checker.check_ground(term, k) {
            Check::Pass => {}
            Check::Fail => {
                println!("refuted: constraint {k} fails");
                return Ok(EXIT_REFUTED);
            }
            Check::Unknown => undecided += 1,
        }
    }
    if undecided > 0 {
        println!("passed {} examples; {undecided} constraint(s) need --mode logical", examples.len());
        return Ok(EXIT_INCONCLUSIVE);
    }
    println!("passed {} examples", examples.len());
    Ok(EXIT_OK)
}
