//! Enumerative search over a grammar's terms.
//!
//! [`TopDown`] expands the leftmost hole of partial programs taken from a
//! priority queue keyed by `(size + holes, insertion order)`.
//! [`BottomUp`] grows a bank of complete terms level by level, where the
//! level is either size or height, passing each new term through a
//! [`BankHook`] before it is stored.

mod bottomup;
pub(crate) mod solve;
mod topdown;

use std::collections::HashSet;

pub use bottomup::{BottomUp, ProgramBank};
pub use solve::{
    candidates, solve, solve_with, BudgetKind, Limits, SolveError, SolveOutcome, SolveReport,
    SolveStats, Strategy,
};
pub use topdown::TopDown;

use crate::program::ProgramTerm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Size,
    Height,
}

impl Metric {
    pub fn of(self, t: &ProgramTerm) -> usize {
        match self {
            Metric::Size => t.size(),
            Metric::Height => t.height(),
        }
    }
}

/// Why a stream ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Every term (within any hook's restrictions) was produced.
    Exhausted,
    /// The configured size or height bound cut the search.
    LevelLimit,
    /// The queue or bank grew past the configured cap.
    MemoryLimit,
    /// The configured deadline passed.
    Timeout,
}

/// A candidate stream.
pub trait Enumerator: Iterator<Item = ProgramTerm> {
    /// `None` while the stream is live.
    fn stop_reason(&self) -> Option<StopReason>;
}

/// Decides whether a freshly built term enters the bank.
pub trait BankHook {
    fn admit(&mut self, bank: &ProgramBank, nonterminal: usize, term: &ProgramTerm, level: usize) -> bool;
}

impl<F> BankHook for F
where
    F: FnMut(&ProgramBank, usize, &ProgramTerm, usize) -> bool,
{
    fn admit(&mut self, bank: &ProgramBank, nonterminal: usize, term: &ProgramTerm, level: usize) -> bool {
        self(bank, nonterminal, term, level)
    }
}

/// Hooks run in registration order; the first rejection wins.
#[derive(Default)]
pub struct HookChain {
    hooks: Vec<Box<dyn BankHook>>,
}

impl HookChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_hook(&mut self, hook: impl BankHook + 'static) -> &mut Self {
        self.hooks.push(Box::new(hook));
        self
    }

    pub fn len(&self) -> usize {
        self.hooks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hooks.is_empty()
    }
}

impl BankHook for HookChain {
    fn admit(&mut self, bank: &ProgramBank, nonterminal: usize, term: &ProgramTerm, level: usize) -> bool {
        self.hooks.iter_mut().all(|h| h.admit(bank, nonterminal, term, level))
    }
}

/// Rejects terms structurally equal to one already admitted.
#[derive(Debug, Default)]
pub struct DedupHook {
    seen: HashSet<(usize, ProgramTerm)>,
}

impl BankHook for DedupHook {
    fn admit(&mut self, _: &ProgramBank, nonterminal: usize, term: &ProgramTerm, _: usize) -> bool {
        self.seen.insert((nonterminal, term.clone()))
    }
}

/// Rejects terms taller than the bound.
#[derive(Debug, Clone, Copy)]
pub struct MaxHeightHook(pub usize);

impl BankHook for MaxHeightHook {
    fn admit(&mut self, _: &ProgramBank, _: usize, term: &ProgramTerm, _: usize) -> bool {
        term.height() <= self.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RejectAll;

impl BankHook for RejectAll {
    fn admit(&mut self, _: &ProgramBank, _: usize, _: &ProgramTerm, _: usize) -> bool {
        false
    }
}

#[cfg(test)]
mod tests;
