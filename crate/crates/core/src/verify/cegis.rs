use std::time::Instant;

use crate::enumerate::solve::{examples_run, over_budget, stop_outcome};
use crate::enumerate::{candidates, Limits, SolveError, SolveOutcome, SolveReport, SolveStats, Strategy};
use crate::eval::{extract_examples, run_examples, Evaluator};
use crate::problem::SynthesisProblem;
use crate::program::EnumGrammar;

use super::{verify_logical, Check, SolverConfig, SpecChecker, VerificationResult};

/// Counterexample-guided synthesis.
///
/// Candidates must pass the ground examples, every other ground
/// constraint and every counterexample found so far, all decided by
/// evaluation; survivors go to [`verify_logical`]. A refutation adds its
/// counterexample and the search continues from the next candidate, which
/// is equivalent to restarting it since earlier candidates already failed
/// a subset of the current checks. Candidates the solver cannot decide are
/// skipped; if the stream then ends, the result is inconclusive.
pub fn cegis(
    problem: &SynthesisProblem,
    strategy: Strategy,
    config: &SolverConfig,
    limits: &Limits,
) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let (examples, residual) = extract_examples(problem);
    let evaluator = Evaluator::new(problem);
    let checker = SpecChecker::new(&evaluator, limits.fuel, limits.mode);
    let ground: Vec<usize> = residual.iter().copied().filter(|k| checker.shape().ground.contains(k)).collect();
    let grammar = EnumGrammar::for_problem(problem);
    let mut stream = candidates(&grammar, strategy, limits, start);
    let mut stats = SolveStats::default();
    let mut last_reason = None;
    let outcome = 'search: loop {
        if let Some(b) = over_budget(limits, &stats, start) {
            break SolveOutcome::Budget(b);
        }
        let Some(t) = stream.next() else {
            break match last_reason.take() {
                Some(r) => SolveOutcome::Inconclusive(r),
                None => stop_outcome(stream.stop_reason()),
            };
        };
        stats.candidates += 1;
        let r = run_examples(&evaluator, &t, &examples, limits.fuel, limits.mode);
        stats.evaluations += examples_run(&r, examples.len());
        if !r.passed() {
            continue;
        }
        for &k in &ground {
            stats.evaluations += 1;
            if checker.check_ground(&t, k) == Check::Fail {
                continue 'search;
            }
        }
        for c in &stats.counterexamples {
            stats.evaluations += 1;
            if checker.check_counterexample(&t, c) == Check::Fail {
                continue 'search;
            }
        }
        let mut config = config.clone();
        if let Some(total) = limits.timeout {
            let left = total.saturating_sub(start.elapsed());
            if left.is_zero() {
                break SolveOutcome::Budget(crate::enumerate::BudgetKind::Time);
            }
            config.time_limit = config.time_limit.min(left);
        }
        let q = Instant::now();
        let verdict = verify_logical(&t, problem, &config)?;
        stats.verifier_calls += 1;
        stats.query_times.push(q.elapsed());
        match verdict {
            VerificationResult::Verified => break SolveOutcome::Solution(t),
            VerificationResult::Refuted(cex) => {
                if stats.counterexamples.contains(&cex) {
                    break SolveOutcome::Inconclusive(format!(
                        "the verifier repeated a counterexample the evaluator accepts: {}",
                        show(&cex)
                    ));
                }
                stats.counterexamples.push(cex);
            }
            VerificationResult::Inconclusive(r) => {
                stats.inconclusive_skips += 1;
                last_reason = Some(format!("{} candidate(s) undecided, last: {r}", stats.inconclusive_skips));
            }
        }
    };
    stats.elapsed = start.elapsed();
    Ok(SolveReport { outcome, stats })
}

fn show(b: &crate::eval::Binding) -> String {
    let parts: Vec<String> = b.iter().map(|(k, v)| format!("{k}={v}")).collect();
    if parts.is_empty() {
        "(ground constraint)".into()
    } else {
        parts.join(" ")
    }
}
