use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use super::*;
use crate::problem::{parse_problem, SynthesisProblem};
use crate::program::EnumGrammar;

const MUL: &str = include_str!("../../../../benchmarks/semgus/imp-mul.sem");

fn e_grammar() -> (SynthesisProblem, EnumGrammar) {
    let p = parse_problem(MUL).unwrap();
    let g = EnumGrammar::for_problem(&p).with_start("E").unwrap();
    (p, g)
}

/// Independent generator: all E terms over {$r $0 $1 $x $y} and {$+ $-},
/// printed, grouped by size.
fn brute_force_by_size(max: usize) -> BTreeMap<usize, BTreeSet<String>> {
    let mut by: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    by.insert(1, ["$r", "$0", "$1", "$x", "$y"].iter().map(|s| s.to_string()).collect());
    for n in 2..=max {
        let mut set = BTreeSet::new();
        for a in 1..n - 1 {
            let b = n - 1 - a;
            for l in by.get(&a).cloned().unwrap_or_default() {
                for r in by.get(&b).cloned().unwrap_or_default() {
                    for op in ["$+", "$-"] {
                        set.insert(format!("({op} {l} {r})"));
                    }
                }
            }
        }
        by.insert(n, set);
    }
    by
}

fn brute_force_by_height(max: usize) -> BTreeMap<usize, BTreeSet<String>> {
    let all = brute_force_by_size(2 * max + 1);
    let height = |s: &str| {
        let (mut d, mut m) = (0usize, 0usize);
        for ch in s.chars() {
            match ch {
                '(' => {
                    d += 1;
                    m = m.max(d);
                }
                ')' => d -= 1,
                _ => {}
            }
        }
        m + 1
    };
    let mut by: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for s in all.values().flatten() {
        let h = height(s);
        if h <= max {
            by.entry(h).or_default().insert(s.clone());
        }
    }
    by
}

fn group(p: &SynthesisProblem, terms: impl Iterator<Item = crate::program::ProgramTerm>, metric: Metric) -> BTreeMap<usize, BTreeSet<String>> {
    let mut by: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for t in terms {
        let fresh = by.entry(metric.of(&t)).or_default().insert(t.display(p).to_string());
        assert!(fresh, "duplicate term");
    }
    by
}

#[test]
fn brute_force_counts() {
    let by = brute_force_by_size(7);
    let counts: Vec<usize> = (1..=7).map(|n| by[&n].len()).collect();
    assert_eq!(counts, [5, 0, 50, 0, 1000, 0, 25000]);
    let h = brute_force_by_height(3);
    assert_eq!((h[&1].len(), h[&2].len(), h[&3].len()), (5, 50, 6000));
}

#[test]
fn top_down_first_terms_in_production_order() {
    let (p, g) = e_grammar();
    let first: Vec<String> = TopDown::new(&g).take(5).map(|t| t.display(&p).to_string()).collect();
    assert_eq!(first, ["$r", "$0", "$1", "$x", "$y"]);
}

#[test]
fn top_down_matches_brute_force_up_to_size_7() {
    let (p, g) = e_grammar();
    let mut td = TopDown::new(&g).max_size(7);
    let got = group(&p, &mut td, Metric::Size);
    assert_eq!(td.stop_reason(), Some(StopReason::LevelLimit));
    let want = brute_force_by_size(7);
    for n in 1..=7 {
        assert_eq!(got.get(&n).cloned().unwrap_or_default(), want[&n], "size {n}");
    }
    let small = TopDown::new(&g).take_while(|t| t.size() <= 3).count();
    assert_eq!(small, 55);
}

#[test]
fn top_down_keys_nondecreasing() {
    let (_, g) = e_grammar();
    let mut td = TopDown::new(&g).max_size(5).record_keys();
    for _ in &mut td {}
    assert!(td.popped_keys().windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn bottom_up_size_matches_brute_force() {
    let (p, g) = e_grammar();
    let mut bu = BottomUp::new(&g, Metric::Size, HookChain::new()).max_level(7);
    let got = group(&p, &mut bu, Metric::Size);
    let want = brute_force_by_size(7);
    for n in 1..=7 {
        assert_eq!(got.get(&n).cloned().unwrap_or_default(), want[&n], "size {n}");
        assert_eq!(bu.bank().get(0, n).len(), want[&n].len());
    }
}

#[test]
fn bottom_up_height_matches_brute_force() {
    let (p, g) = e_grammar();
    let mut bu = BottomUp::new(&g, Metric::Height, HookChain::new()).max_level(3);
    let got = group(&p, &mut bu, Metric::Height);
    assert_eq!(got, brute_force_by_height(3));
    assert_eq!(bu.bank().get(0, 2).len(), 50);
}

#[test]
fn reject_all_hook_yields_nothing() {
    let (_, g) = e_grammar();
    let mut bu = BottomUp::new(&g, Metric::Size, RejectAll);
    assert_eq!((&mut bu).count(), 0);
    assert!(bu.bank().is_empty());
    assert_eq!(bu.stop_reason(), Some(StopReason::Exhausted));
}

#[test]
fn height_limit_hook_gives_55_terms() {
    let (p, g) = e_grammar();
    let mut hooks = HookChain::new();
    hooks.register_hook(MaxHeightHook(2));
    let mut bu = BottomUp::new(&g, Metric::Height, hooks);
    let got = group(&p, &mut bu, Metric::Height);
    assert_eq!(got.values().map(BTreeSet::len).sum::<usize>(), 55);
    assert_eq!(bu.stop_reason(), Some(StopReason::Exhausted));
}

#[test]
fn dedup_hook_keeps_duplicate_free_banks() {
    let (_, g) = e_grammar();
    let mut plain = BottomUp::new(&g, Metric::Size, HookChain::new()).max_level(5);
    let mut hooks = HookChain::new();
    hooks.register_hook(DedupHook::default());
    let mut dedup = BottomUp::new(&g, Metric::Size, hooks).max_level(5);
    assert_eq!((&mut plain).count(), (&mut dedup).count());
    assert_eq!(plain.bank().len(), dedup.bank().len());
}

#[test]
fn hooks_short_circuit_in_order() {
    use std::cell::Cell;
    use std::rc::Rc;
    let (_, g) = e_grammar();
    let calls = Rc::new(Cell::new(0));
    let c = calls.clone();
    let mut hooks = HookChain::new();
    hooks.register_hook(RejectAll).register_hook(move |_: &ProgramBank, _: usize, _: &crate::program::ProgramTerm, _: usize| {
        c.set(c.get() + 1);
        true
    });
    let n = BottomUp::new(&g, Metric::Size, hooks).count();
    assert_eq!(n, 0);
    assert_eq!(calls.get(), 0);
}

#[test]
fn single_nullary_production() {
    let text = "(declare-term-types ((U 0)) ((($u))))
        (define-funs-rec ((U.Sem ((t U) (x Int)) Bool)) ((match t ((($u) true)))))
        (synth-fun f () U) (check-synth)";
    let p = parse_problem(text).unwrap();
    let g = EnumGrammar::for_problem(&p);
    assert_eq!(TopDown::new(&g).count(), 1);
    let mut bu = BottomUp::new(&g, Metric::Size, HookChain::new());
    assert_eq!((&mut bu).count(), 1);
    assert_eq!(BottomUp::new(&g, Metric::Height, HookChain::new()).count(), 1);
    let mut td = TopDown::new(&g);
    td.by_ref().count();
    assert_eq!(td.stop_reason(), Some(StopReason::Exhausted));
}

#[test]
fn universe_grammar_bottom_up_is_grammar_sound() {
    let p = parse_problem(MUL).unwrap();
    let g = EnumGrammar::for_problem(&p);
    for t in BottomUp::new(&g, Metric::Size, HookChain::new()).max_level(8).take(2000) {
        assert!(g.derives(g.start, &t));
    }
    for t in TopDown::new(&g).take(2000) {
        assert!(g.derives(g.start, &t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn top_down_size_order(n in 1usize..400) {
        let (_, g) = e_grammar();
        let sizes: Vec<usize> = TopDown::new(&g).take(n).map(|t| t.size()).collect();
        prop_assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn bottom_up_levels_match_metric(n in 1usize..2000, height in any::<bool>()) {
        let (_, g) = e_grammar();
        let metric = if height { Metric::Height } else { Metric::Size };
        let mut last = 0;
        for t in BottomUp::new(&g, metric, HookChain::new()).take(n) {
            let m = metric.of(&t);
            prop_assert!(m >= last);
            last = m;
        }
    }
}
