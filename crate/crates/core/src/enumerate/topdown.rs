use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use crate::program::{EnumGrammar, ProgramTerm};

use super::{Enumerator, StopReason};

/// Persistent cons list; partial programs share their prefixes.
#[derive(Debug)]
struct Cons<T> {
    head: T,
    tail: List<T>,
}

type List<T> = Option<Rc<Cons<T>>>;

fn cons<T>(head: T, tail: &List<T>) -> List<T> {
    Some(Rc::new(Cons { head, tail: tail.clone() }))
}

/// A partial program: the production choices made so far (most recent
/// first, pre-order) and the holes still to fill (leftmost first).
#[derive(Debug, Clone)]
struct Partial {
    choices: List<(u32, u32)>,
    holes: List<u32>,
    size: u32,
    hole_count: u32,
}

struct Entry {
    key: u32,
    seq: u64,
    item: Partial,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        (self.key, self.seq) == (other.key, other.seq)
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // BinaryHeap is a max-heap: smallest (key, seq) must compare greatest
    fn cmp(&self, other: &Self) -> Ordering {
        (other.key, other.seq).cmp(&(self.key, self.seq))
    }
}

/// Top-down enumeration. Items leave the queue in `(size + holes, FIFO)`
/// order; complete programs are yielded, partial ones are expanded at
/// their leftmost hole with every production of its nonterminal, in
/// grammar order.
pub struct TopDown<'g> {
    grammar: &'g EnumGrammar,
    queue: BinaryHeap<Entry>,
    seq: u64,
    max_size: Option<usize>,
    max_queue: Option<usize>,
    stop: Option<StopReason>,
    truncated: bool,
    popped_keys: Option<Vec<u32>>,
    deadline: Option<Instant>,
    steps: u64,
}

impl<'g> TopDown<'g> {
    pub fn new(grammar: &'g EnumGrammar) -> Self {
        let mut td = TopDown {
            grammar,
            queue: BinaryHeap::new(),
            seq: 0,
            max_size: None,
            max_queue: None,
            stop: None,
            truncated: false,
            popped_keys: None,
            deadline: None,
            steps: 0,
        };
        let start = grammar.start as u32;
        td.push(Partial { choices: None, holes: cons(start, &None), size: 0, hole_count: 1 });
        td
    }

    /// Only produce terms up to this size.
    pub fn max_size(mut self, n: usize) -> Self {
        self.max_size = Some(n);
        self
    }

    /// Stop with [`StopReason::MemoryLimit`] once the queue holds more items.
    pub fn max_queue(mut self, n: usize) -> Self {
        self.max_queue = Some(n);
        self
    }

    /// Records the key of every popped item (for testing the order).
    pub fn record_keys(mut self) -> Self {
        self.popped_keys = Some(Vec::new());
        self
    }

    /// Stop with [`StopReason::Timeout`] once `at` has passed.
    pub fn deadline(mut self, at: Instant) -> Self {
        self.deadline = Some(at);
        self
    }

    pub fn popped_keys(&self) -> &[u32] {
        self.popped_keys.as_deref().unwrap_or(&[])
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    fn push(&mut self, item: Partial) {
        let key = item.size + item.hole_count;
        // every completion has size at least `key`
        if self.max_size.is_some_and(|m| key as usize > m) {
            self.truncated = true;
            return;
        }
        self.seq += 1;
        self.queue.push(Entry { key, seq: self.seq, item });
    }

    fn build(&self, choices: &List<(u32, u32)>) -> ProgramTerm {
        let mut pre = Vec::new();
        let mut cur = choices;
        while let Some(c) = cur {
            pre.push(c.head);
            cur = &c.tail;
        }
        pre.reverse();
        let mut it = pre.into_iter();
        let t = self.build_from(&mut it);
        debug_assert!(it.next().is_none());
        t
    }

    fn build_from(&self, it: &mut impl Iterator<Item = (u32, u32)>) -> ProgramTerm {
        let (nt, p) = it.next().expect("choice list is a complete pre-order");
        let prod = &self.grammar.nonterminals[nt as usize].productions[p as usize];
        let children = prod.children.iter().map(|_| self.build_from(it)).collect();
        ProgramTerm::node(prod.ctor, children)
    }
}

impl Iterator for TopDown<'_> {
    type Item = ProgramTerm;

    fn next(&mut self) -> Option<ProgramTerm> {
        if self.stop.is_some() {
            return None;
        }
        loop {
            if self.max_queue.is_some_and(|m| self.queue.len() > m) {
                self.stop = Some(StopReason::MemoryLimit);
                return None;
            }
            self.steps += 1;
            if self.steps % 1024 == 0 && self.deadline.is_some_and(|d| Instant::now() >= d) {
                self.stop = Some(StopReason::Timeout);
                return None;
            }
            let Some(Entry { key, item, .. }) = self.queue.pop() else {
                self.stop =
                    Some(if self.truncated { StopReason::LevelLimit } else { StopReason::Exhausted });
                return None;
            };
            if let Some(keys) = &mut self.popped_keys {
                keys.push(key);
            }
            let Some(hole) = item.holes.clone() else {
                return Some(self.build(&item.choices));
            };
            let nt = hole.head;
            let rest = &hole.tail;
            let grammar = self.grammar;
            for (p, prod) in grammar.nonterminals[nt as usize].productions.iter().enumerate() {
                let mut holes = rest.clone();
                for &c in prod.children.iter().rev() {
                    holes = cons(c as u32, &holes);
                }
                self.push(Partial {
                    choices: cons((nt, p as u32), &item.choices),
                    holes,
                    size: item.size + 1,
                    hole_count: item.hole_count - 1 + prod.children.len() as u32,
                });
            }
        }
    }
}

impl Enumerator for TopDown<'_> {
    fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }
}
