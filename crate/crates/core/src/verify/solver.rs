//! Running an SMT solver as a one-shot subprocess.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::eval::{value_from_sexpr, Binding, Value};
use crate::formula::{BitVec, Sort};
use crate::sexpr::{read_sexprs, SExpr};

/// Environment variable naming the default solver executable.
pub const SOLVER_ENV: &str = "SEMGUS_SMT_SOLVER";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub executable: PathBuf,
    pub args: Vec<String>,
    pub time_limit: Duration,
    /// Passed to solvers known to accept a memory bound, in megabytes.
    pub memory_mb: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let exe = std::env::var_os(SOLVER_ENV).map(PathBuf::from).unwrap_or_else(|| "z3".into());
        SolverConfig::for_executable(exe)
    }
}

impl SolverConfig {
    /// Reads SMT-LIB from stdin with arguments suited to the executable.
    pub fn for_executable(executable: impl Into<PathBuf>) -> Self {
        let executable = executable.into();
        let stem = executable.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let args = if stem.starts_with("cvc") {
            vec!["--lang=smt2".into(), "--incremental".into()]
        } else {
            vec!["-in".into(), "-smt2".into()]
        };
        SolverConfig { executable, args, time_limit: Duration::from_secs(10), memory_mb: None }
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = limit;
        self
    }

    fn command(&self) -> Command {
        let mut c = Command::new(&self.executable);
        c.args(&self.args);
        if let Some(mb) = self.memory_mb {
            if self.executable.file_stem().and_then(|s| s.to_str()) == Some("z3") {
                c.arg(format!("-memory:{mb}"));
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("solver failed: {0}")]
    SolverCrash(String),
    #[error("could not read the model: {0}")]
    ModelParseError(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Vec<SExpr>),
    Unsat,
    Unknown(String),
    Timeout,
}

/// Feeds `script` to the solver and reads its first answer, killing the
/// process at the time limit. Anything after `sat` is returned unparsed.
pub fn run_solver(config: &SolverConfig, script: &str) -> Result<SatResult, SolverError> {
    let mut child = config
        .command()
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SolverError::SolverCrash(format!("{}: {e}", config.executable.display())))?;
    let mut stdin = child.stdin.take().unwrap();
    let script = script.to_string();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(script.as_bytes());
    });
    let mut stdout = child.stdout.take().unwrap();
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let mut stderr = child.stderr.take().unwrap();
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let deadline = Instant::now() + config.time_limit;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            Ok(None) => thread::sleep(Duration::from_millis(2)),
            Err(e) => return Err(SolverError::SolverCrash(e.to_string())),
        }
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    if status.is_none() {
        return Ok(SatResult::Timeout);
    }
    let exprs = read_sexprs(&out).map_err(|e| SolverError::SolverCrash(format!("unreadable output: {e}")))?;
    let mut it = exprs.into_iter();
    match it.next() {
        Some(SExpr::Symbol(s)) if s == "sat" => Ok(SatResult::Sat(it.collect())),
        Some(SExpr::Symbol(s)) if s == "unsat" => Ok(SatResult::Unsat),
        Some(SExpr::Symbol(s)) if s == "unknown" => Ok(SatResult::Unknown("solver answered unknown".into())),
        Some(e) => Err(SolverError::SolverCrash(excerpt(&format!("{e} {err}")))),
        None => Err(SolverError::SolverCrash(excerpt(if err.is_empty() { "no output" } else { &err }))),
    }
}

fn excerpt(s: &str) -> String {
    let s = s.trim();
    match s.char_indices().nth(300) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

/// Reads the values of `constants` from a `get-model` answer. Constants
/// the model leaves out are irrelevant and get a default value.
pub fn parse_model(answer: &[SExpr], constants: &[(String, Sort)]) -> Result<Binding, SolverError> {
    let mut entries = Vec::new();
    for e in answer {
        let Some(items) = e.as_list() else { continue };
        let items = match items.first().and_then(SExpr::as_symbol) {
            Some("model") => &items[1..],
            _ => items,
        };
        for d in items {
            if let Some([head, name, params, _, value]) = d.as_list() {
                if head.as_symbol() == Some("define-fun") && params.as_list().is_some_and(|p| p.is_empty()) {
                    if let Some(n) = name.as_symbol() {
                        entries.push((n.to_string(), value.clone()));
                    }
                }
            }
        }
    }
    let mut binding = Binding::new();
    for (c, sort) in constants {
        let v = match entries.iter().find(|(n, _)| n == c) {
            Some((_, e)) => value_from_sexpr(e, sort)
                .ok_or_else(|| SolverError::ModelParseError(format!("`{c}` = {e}")))?,
            None => default_value(sort),
        };
        binding.insert(c.clone(), v);
    }
    Ok(binding)
}

fn default_value(sort: &Sort) -> Value {
    match sort {
        Sort::Bool => Value::Bool(false),
        Sort::BitVec(w) => Value::BitVec(BitVec::from_u64(*w, 0)),
        Sort::String => Value::Str(String::new()),
        _ => Value::int(0),
    }
}
