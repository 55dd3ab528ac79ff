use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::eval::{extract_examples, run_examples, Binding, EvalMode, Evaluator, ExampleResult, DEFAULT_FUEL};
use crate::problem::SynthesisProblem;
use crate::program::{EnumGrammar, ProgramTerm};
use crate::verify::{cegis, Check, SolverConfig, SolverError, SpecChecker};

use super::{BottomUp, Enumerator, HookChain, Metric, StopReason, TopDown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    TopDown,
    BottomUpSize,
    BottomUpHeight,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::TopDown, Strategy::BottomUpSize, Strategy::BottomUpHeight];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::TopDown => "top-down",
            Strategy::BottomUpSize => "bottom-up-size",
            Strategy::BottomUpHeight => "bottom-up-height",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected top-down, bottom-up-size or bottom-up-height)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limits {
    pub max_candidates: Option<u64>,
    /// Largest size (top-down, bottom-up by size) or height to reach.
    pub max_level: Option<usize>,
    pub timeout: Option<Duration>,
    /// Queue items (top-down) or banked terms (bottom-up) to hold at most.
    pub max_live: Option<usize>,
    pub fuel: u64,
    pub mode: EvalMode,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_candidates: None,
            max_level: None,
            timeout: None,
            max_live: None,
            fuel: DEFAULT_FUEL,
            mode: EvalMode::FirstMatch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Candidates,
    Level,
    Time,
    Memory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Solution(ProgramTerm),
    /// The whole search space was tried.
    Exhausted,
    Budget(BudgetKind),
    /// Some candidates could not be verified and none could be accepted.
    Inconclusive(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub candidates: u64,
    /// Single runs of the evaluator, on examples or instances.
    pub evaluations: u64,
    pub elapsed: Duration,
    /// Counterexamples in the order they were found.
    pub counterexamples: Vec<Binding>,
    pub verifier_calls: usize,
    /// Wall time of each verifier call.
    pub query_times: Vec<Duration>,
    pub inconclusive_skips: usize,
}

impl SolveStats {
    pub fn evals_per_sec(&self) -> f64 {
        let s = self.elapsed.as_secs_f64();
        if s > 0.0 {
            self.evaluations as f64 / s
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub outcome: SolveOutcome,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("the semantics cannot be executed: {0}")]
    NotOperationalizable(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A candidate stream for `strategy` under `limits`.
pub fn candidates<'g>(
    grammar: &'g EnumGrammar,
    strategy: Strategy,
    limits: &Limits,
    start: Instant,
) -> Box<dyn Enumerator + 'g> {
    let deadline = limits.timeout.map(|t| start + t);
    match strategy {
        Strategy::TopDown => {
            let mut td = TopDown::new(grammar);
            if let Some(n) = limits.max_level {
                td = td.max_size(n);
            }
            if let Some(n) = limits.max_live {
                td = td.max_queue(n);
            }
            if let Some(d) = deadline {
                td = td.deadline(d);
            }
            Box::new(td)
        }
        Strategy::BottomUpSize | Strategy::BottomUpHeight => {
            let metric = if strategy == Strategy::BottomUpSize { Metric::Size } else { Metric::Height };
            let mut bu = BottomUp::new(grammar, metric, HookChain::new());
            if let Some(n) = limits.max_level {
                bu = bu.max_level(n);
            }
            if let Some(n) = limits.max_live {
                bu = bu.max_bank(n);
            }
            if let Some(d) = deadline {
                bu = bu.deadline(d);
            }
            Box::new(bu)
        }
    }
}

pub(crate) fn stop_outcome(reason: Option<StopReason>) -> SolveOutcome {
    match reason {
        Some(StopReason::LevelLimit) => SolveOutcome::Budget(BudgetKind::Level),
        Some(StopReason::MemoryLimit) => SolveOutcome::Budget(BudgetKind::Memory),
        Some(StopReason::Timeout) => SolveOutcome::Budget(BudgetKind::Time),
        Some(StopReason::Exhausted) | None => SolveOutcome::Exhausted,
    }
}

/// Whether the candidate budget or clock has run out.
pub(crate) fn over_budget(limits: &Limits, stats: &SolveStats, start: Instant) -> Option<BudgetKind> {
    if limits.timeout.is_some_and(|t| start.elapsed() >= t) {
        return Some(BudgetKind::Time);
    }
    if limits.max_candidates.is_some_and(|m| stats.candidates > m) {
        return Some(BudgetKind::Candidates);
    }
    None
}

pub(crate) fn examples_run(result: &ExampleResult, total: usize) -> u64 {
    match result {
        ExampleResult::Pass => total as u64,
        ExampleResult::Fail { index, .. } => *index as u64 + 1,
    }
}

/// [`solve_with`] using the default solver configuration.
pub fn solve(problem: &SynthesisProblem, strategy: Strategy, limits: &Limits) -> Result<SolveReport, SolveError> {
    solve_with(problem, strategy, limits, &SolverConfig::default())
}

/// Returns the first candidate passing every example and every other
/// ground constraint, decided by evaluation. Problems with universal
/// constraints, or ground ones evaluation cannot decide, go through
/// [`cegis`].
pub fn solve_with(
    problem: &SynthesisProblem,
    strategy: Strategy,
    limits: &Limits,
    solver: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    let (examples, residual) = extract_examples(problem);
    let evaluator = Evaluator::new(problem);
    if !examples.is_empty() && !evaluator.plans().is_complete() {
        let msgs: Vec<String> = evaluator.plans().errors.iter().map(|(_, e)| e.to_string()).collect();
        return Err(SolveError::NotOperationalizable(msgs.join("; ")));
    }
    let checker = SpecChecker::new(&evaluator, limits.fuel, limits.mode);
    if !residual.iter().all(|k| checker.shape().ground.contains(k)) {
        return cegis(problem, strategy, solver, limits);
    }
    let start = Instant::now();
    let grammar = EnumGrammar::for_problem(problem);
    let mut stream = candidates(&grammar, strategy, limits, start);
    let mut stats = SolveStats::default();
    let outcome = loop {
        if let Some(b) = over_budget(limits, &stats, start) {
            break SolveOutcome::Budget(b);
        }
        let Some(t) = stream.next() else { break stop_outcome(stream.stop_reason()) };
        stats.candidates += 1;
        let r = run_examples(&evaluator, &t, &examples, limits.fuel, limits.mode);
        stats.evaluations += examples_run(&r, examples.len());
        if !r.passed() {
            continue;
        }
        let mut verdict = Check::Pass;
        for &k in &residual {
            stats.evaluations += 1;
            verdict = verdict.and(checker.check_ground(&t, k));
            if verdict == Check::Fail {
                break;
            }
        }
        match verdict {
            Check::Pass => break SolveOutcome::Solution(t),
            Check::Fail => {}
            // evaluation cannot decide it; leave it to the solver
            Check::Unknown => return cegis(problem, strategy, solver, limits),
        }
    };
    stats.elapsed = start.elapsed();
    Ok(SolveReport { outcome, stats })
}
