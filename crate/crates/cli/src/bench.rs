use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use semgus::enumerate::{solve_with, BudgetKind, Limits, SolveOutcome, Strategy};
use semgus::verify::SolverConfig;

use crate::load_problem;

pub const HEADER: [&str; 7] =
    ["path", "strategy", "status", "median_seconds", "candidates", "evals_per_sec", "cex_count"];

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub path: String,
    pub strategy: Strategy,
    pub status: &'static str,
    pub seconds: f64,
    pub candidates: u64,
    pub evals_per_sec: f64,
    pub cex_count: usize,
}

fn status(o: &SolveOutcome) -> &'static str {
    match o {
        SolveOutcome::Solution(_) => "solved",
        SolveOutcome::Exhausted | SolveOutcome::Budget(BudgetKind::Candidates | BudgetKind::Level) => "exhausted",
        SolveOutcome::Budget(BudgetKind::Time) => "timeout",
        SolveOutcome::Budget(BudgetKind::Memory) => "memout",
        SolveOutcome::Inconclusive(_) => "inconclusive",
    }
}

fn problem_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "sem" || e == "sl"))
        .collect();
    files.sort();
    Ok(files)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn bench_one(path: &Path, strategy: Strategy, limits: &Limits, cfg: &SolverConfig, repeat: usize) -> BenchRecord {
    let mut rec = BenchRecord {
        path: path.display().to_string(),
        strategy,
        status: "error",
        seconds: 0.0,
        candidates: 0,
        evals_per_sec: 0.0,
        cex_count: 0,
    };
    let problem = match load_problem(path) {
        Ok(Ok(p)) => p,
        _ => return rec,
    };
    let mut times = Vec::new();
    for _ in 0..repeat {
        match solve_with(&problem, strategy, limits, cfg) {
            Ok(r) => {
                times.push(r.stats.elapsed.as_secs_f64());
                rec.status = status(&r.outcome);
                rec.candidates = r.stats.candidates;
                rec.evals_per_sec = r.stats.evals_per_sec();
                rec.cex_count = r.stats.counterexamples.len();
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                rec.status = "error";
                return rec;
            }
        }
    }
    rec.seconds = median(times);
    rec
}

/// Cumulative solved count against time, one `seconds count` pair per line.
pub fn cactus(times: &mut [f64]) -> String {
    times.sort_by(f64::total_cmp);
    times.iter().enumerate().map(|(i, t)| format!("{t:.6} {}\n", i + 1)).collect()
}

pub fn run(
    dir: &Path,
    strategies: &[Strategy],
    limits: &Limits,
    cfg: &SolverConfig,
    repeat: usize,
    out: &Path,
) -> Result<Vec<BenchRecord>> {
    let files = problem_files(dir)?;
    let mut records = Vec::new();
    for f in &files {
        for &s in strategies {
            let r = bench_one(f, s, limits, cfg, repeat);
            eprintln!("{} {} {} {:.3}s", r.path, s, r.status, r.seconds);
            records.push(r);
        }
    }
    let mut w = csv::Writer::from_path(out).with_context(|| format!("cannot write {}", out.display()))?;
    w.write_record(HEADER)?;
    for r in &records {
        w.write_record([
            r.path.clone(),
            r.strategy.to_string(),
            r.status.to_string(),
            format!("{:.6}", r.seconds),
            r.candidates.to_string(),
            format!("{:.1}", r.evals_per_sec),
            r.cex_count.to_string(),
        ])?;
    }
    w.flush()?;
    let out_dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    // virtual best: each problem's fastest solving strategy
    let mut best: Vec<f64> = files
        .iter()
        .filter_map(|f| {
            let path = f.display().to_string();
            records
                .iter()
                .filter(|r| r.path == path && r.status == "solved")
                .map(|r| r.seconds)
                .min_by(f64::total_cmp)
        })
        .collect();
    write_file(&out_dir.join("cactus.dat"), &cactus(&mut best))?;
    if strategies.len() > 1 {
        for &s in strategies {
            let mut ts: Vec<f64> =
                records.iter().filter(|r| r.strategy == s && r.status == "solved").map(|r| r.seconds).collect();
            write_file(&out_dir.join(format!("cactus-{s}.dat")), &cactus(&mut ts))?;
        }
    }
    Ok(records)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
