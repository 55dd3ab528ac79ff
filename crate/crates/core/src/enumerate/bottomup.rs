use std::time::Instant;

use crate::program::{EnumGrammar, ProgramTerm};

use super::{BankHook, Enumerator, Metric, StopReason};

/// Complete terms per nonterminal and level (size or height).
#[derive(Debug, Clone)]
pub struct ProgramBank {
    metric: Metric,
    // [nonterminal][level], level 0 unused
    levels: Vec<Vec<Vec<ProgramTerm>>>,
    total: usize,
}

impl ProgramBank {
    fn new(metric: Metric, nonterminals: usize) -> Self {
        ProgramBank { metric, levels: vec![vec![Vec::new()]; nonterminals], total: 0 }
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn get(&self, nonterminal: usize, level: usize) -> &[ProgramTerm] {
        self.levels[nonterminal].get(level).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Number of terms stored.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    fn insert(&mut self, nonterminal: usize, level: usize, t: ProgramTerm) {
        let l = &mut self.levels[nonterminal];
        if l.len() <= level {
            l.resize(level + 1, Vec::new());
        }
        l[level].push(t);
        self.total += 1;
    }
}

/// Child level tuples for a production of `arity` at `level`.
fn child_levels(metric: Metric, arity: usize, level: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if arity == 0 {
        if level == 1 {
            out.push(Vec::new());
        }
        return out;
    }
    if level < 2 {
        return out;
    }
    let mut cur = vec![1; arity];
    let below = level - 1;
    loop {
        let keep = match metric {
            Metric::Size => cur.iter().sum::<usize>() == below,
            Metric::Height => cur.iter().max() == Some(&below),
        };
        if keep {
            out.push(cur.clone());
        }
        // odometer over 1..=below
        let mut i = arity;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < below {
                cur[i] += 1;
                for c in &mut cur[i + 1..] {
                    *c = 1;
                }
                break;
            }
        }
    }
}

/// Bottom-up enumeration by size or height.
///
/// Level `n` combines banked children whose sizes sum to `n - 1` (size) or
/// whose maximum height is `n - 1` (height), for every nonterminal and
/// production in grammar order. Terms rooted at the start nonterminal are
/// yielded as soon as they are admitted.
pub struct BottomUp<'g, H> {
    grammar: &'g EnumGrammar,
    hook: H,
    bank: ProgramBank,
    level: usize,
    nt: usize,
    prod: usize,
    tuples: Vec<Vec<usize>>,
    tuple: usize,
    // indices into the bank for the current tuple; None before the first
    cursor: Option<Vec<usize>>,
    level_admitted: usize,
    highest_nonempty: usize,
    max_level: Option<usize>,
    max_bank: Option<usize>,
    stop: Option<StopReason>,
    deadline: Option<Instant>,
    steps: u64,
}

impl<'g, H: BankHook> BottomUp<'g, H> {
    pub fn new(grammar: &'g EnumGrammar, metric: Metric, hook: H) -> Self {
        let mut b = BottomUp {
            grammar,
            hook,
            bank: ProgramBank::new(metric, grammar.nonterminals.len()),
            level: 1,
            nt: 0,
            prod: 0,
            tuples: Vec::new(),
            tuple: 0,
            cursor: None,
            level_admitted: 0,
            highest_nonempty: 0,
            max_level: None,
            max_bank: None,
            stop: None,
            deadline: None,
            steps: 0,
        };
        b.load_production();
        b
    }

    /// Only build levels up to `n`.
    pub fn max_level(mut self, n: usize) -> Self {
        self.max_level = Some(n);
        self
    }

    /// Stop with [`StopReason::MemoryLimit`] once the bank holds more terms.
    pub fn max_bank(mut self, n: usize) -> Self {
        self.max_bank = Some(n);
        self
    }

    /// Stop with [`StopReason::Timeout`] once `at` has passed.
    pub fn deadline(mut self, at: Instant) -> Self {
        self.deadline = Some(at);
        self
    }

    pub fn bank(&self) -> &ProgramBank {
        &self.bank
    }

    pub fn hook(&self) -> &H {
        &self.hook
    }

    fn load_production(&mut self) {
        let arity = self
            .grammar
            .nonterminals
            .get(self.nt)
            .and_then(|n| n.productions.get(self.prod))
            .map_or(0, |p| p.children.len());
        self.tuples = child_levels(self.bank.metric, arity, self.level);
        self.tuple = 0;
        self.cursor = None;
    }

    /// Moves to the next production, nonterminal or level. Returns false
    /// when the search is over.
    fn advance_production(&mut self) -> bool {
        self.prod += 1;
        while self.nt < self.grammar.nonterminals.len()
            && self.prod >= self.grammar.nonterminals[self.nt].productions.len()
        {
            self.nt += 1;
            self.prod = 0;
        }
        if self.nt >= self.grammar.nonterminals.len() {
            if !self.finish_level() {
                return false;
            }
            self.level += 1;
            self.nt = 0;
            self.prod = 0;
            while self.nt < self.grammar.nonterminals.len()
                && self.grammar.nonterminals[self.nt].productions.is_empty()
            {
                self.nt += 1;
            }
            if self.nt >= self.grammar.nonterminals.len() {
                self.stop = Some(StopReason::Exhausted);
                return false;
            }
        }
        self.load_production();
        true
    }

    /// Decides whether the level after the current one can hold terms.
    fn finish_level(&mut self) -> bool {
        let admitted = std::mem::take(&mut self.level_admitted);
        if admitted > 0 {
            self.highest_nonempty = self.level;
        }
        let done = match self.bank.metric {
            Metric::Height => admitted == 0,
            Metric::Size => {
                let kmax = self.grammar.max_arity();
                self.level + 1 > kmax * self.highest_nonempty + 1
            }
        };
        if done {
            self.stop = Some(StopReason::Exhausted);
            return false;
        }
        if self.max_level.is_some_and(|m| self.level + 1 > m) {
            self.stop = Some(StopReason::LevelLimit);
            return false;
        }
        true
    }

    /// Next child-index combination for the current production.
    fn next_combination(&mut self) -> Option<Vec<usize>> {
        let prod = &self.grammar.nonterminals[self.nt].productions[self.prod];
        loop {
            let levels = self.tuples.get(self.tuple)?;
            let sizes: Vec<usize> =
                prod.children.iter().zip(levels).map(|(&c, &l)| self.bank.get(c, l).len()).collect();
            if sizes.iter().any(|&s| s == 0) {
                self.tuple += 1;
                self.cursor = None;
                continue;
            }
            match &mut self.cursor {
                None => {
                    let c = vec![0; sizes.len()];
                    self.cursor = Some(c.clone());
                    return Some(c);
                }
                Some(cur) => {
                    let mut i = cur.len();
                    let mut advanced = false;
                    while i > 0 {
                        i -= 1;
                        if cur[i] + 1 < sizes[i] {
                            cur[i] += 1;
                            for c in &mut cur[i + 1..] {
                                *c = 0;
                            }
                            advanced = true;
                            break;
                        }
                    }
                    if advanced {
                        return Some(cur.clone());
                    }
                    self.tuple += 1;
                    self.cursor = None;
                }
            }
        }
    }
}

impl<H: BankHook> Iterator for BottomUp<'_, H> {
    type Item = ProgramTerm;

    fn next(&mut self) -> Option<ProgramTerm> {
        if self.stop.is_some() {
            return None;
        }
        if self.max_level.is_some_and(|m| m == 0) {
            self.stop = Some(StopReason::LevelLimit);
            return None;
        }
        loop {
            if self.max_bank.is_some_and(|m| self.bank.len() > m) {
                self.stop = Some(StopReason::MemoryLimit);
                return None;
            }
            self.steps += 1;
            if self.steps % 1024 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d) {
                self.stop = Some(StopReason::Timeout);
                return None;
            }
            let grammar = self.grammar;
            let has_prod = grammar.nonterminals.get(self.nt).is_some_and(|n| self.prod < n.productions.len());
            let combo = if has_prod { self.next_combination() } else { None };
            let Some(idx) = combo else {
                if !self.advance_production() {
                    return None;
                }
                continue;
            };
            let prod = &grammar.nonterminals[self.nt].productions[self.prod];
            let levels = &self.tuples[self.tuple];
            let children: Vec<ProgramTerm> = prod
                .children
                .iter()
                .zip(levels)
                .zip(&idx)
                .map(|((&c, &l), &i)| self.bank.get(c, l)[i].clone())
                .collect();
            let term = ProgramTerm::node(prod.ctor, children);
            if !self.hook.admit(&self.bank, self.nt, &term, self.level) {
                continue;
            }
            self.bank.insert(self.nt, self.level, term.clone());
            self.level_admitted += 1;
            if self.nt == grammar.start {
                return Some(term);
            }
        }
    }
}

impl<H: BankHook> Enumerator for BottomUp<'_, H> {
    fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }
}
