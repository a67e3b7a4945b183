mod common;

use std::collections::BTreeSet;

use common::{motivating_log, trace};
use imr_core::discovery::{Cut, Operator};
use imr_core::log::{build_dfg, format_variants, parse_variants, project_log, split_log, EventLog};
use proptest::prelude::*;

fn set(v: &[&str]) -> BTreeSet<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn motivating_log_shape() {
    let log = motivating_log();
    assert_eq!(log.total_traces(), 1000);
    assert_eq!(log.alphabet().len(), 6);
    assert_eq!(log.variants()[&trace(&["A-created", "A-canceled"])], 300);
}

#[test]
fn motivating_dfg_tallies() {
    let dfg = build_dfg(&motivating_log());
    assert_eq!(dfg.edge("A-created", "Doc-checked"), 200 + 300 + 35);
    assert_eq!(dfg.edge("Hist-checked", "Doc-checked"), 50 + 80);
    assert_eq!(dfg.start_freq("A-created"), 1000);
    let ends: u64 = dfg.activities().iter().map(|a| dfg.end_freq(a)).sum();
    assert_eq!(ends, 1000);
}

#[test]
fn motivating_projection() {
    let log = motivating_log();
    let only = project_log(&log, &set(&["A-created"]));
    assert_eq!(only.variants().len(), 1);
    assert_eq!(only.variants()[&trace(&["A-created"])], 1000);
    let none = project_log(&log, &BTreeSet::new());
    assert_eq!(none.empty_traces(), 1000);
    assert_eq!(project_log(&log, log.alphabet()), log);
}

#[test]
fn split_examples() {
    let log = parse_variants("1;Doc-checked,Hist-checked,A-accepted\n2;A-canceled,A-rejected\n").unwrap();
    let cut = Cut::new(
        Operator::Xor,
        set(&["A-canceled"]),
        set(&["Doc-checked", "Hist-checked", "A-accepted", "A-rejected"]),
    )
    .unwrap();
    let (_, r) = split_log(&log, &cut).unwrap();
    assert_eq!(r.variants()[&trace(&["Doc-checked", "Hist-checked", "A-accepted"])], 1);

    let log = parse_variants("1;A-created,A-canceled\n1;A-created,Doc-checked\n").unwrap();
    let cut = Cut::new(Operator::Sequence, set(&["A-created"]), set(&["A-canceled", "Doc-checked"])).unwrap();
    let (l, r) = split_log(&log, &cut).unwrap();
    assert_eq!(l.variants()[&trace(&["A-created"])], 2);
    assert_eq!(r.variants()[&trace(&["A-canceled"])], 1);

    let log = parse_variants("1;Hist-checked,Doc-checked\n").unwrap();
    let cut = Cut::new(Operator::Parallel, set(&["Doc-checked"]), set(&["Hist-checked"])).unwrap();
    let (l, r) = split_log(&log, &cut).unwrap();
    assert_eq!(l.variants().keys().next().unwrap(), &trace(&["Doc-checked"]));
    assert_eq!(r.variants().keys().next().unwrap(), &trace(&["Hist-checked"]));

    let cut = Cut::new(Operator::Parallel, set(&["Doc-checked"]), set(&["A-created"])).unwrap();
    assert!(split_log(&log, &cut).is_err());
}

fn arb_log() -> impl Strategy<Value = EventLog> {
    let trace = prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..7);
    prop::collection::vec((trace, 1u64..20), 1..10).prop_map(|pairs| {
        EventLog::from_counts(
            pairs
                .into_iter()
                .map(|(t, c)| (t.into_iter().map(String::from).collect(), c)),
        )
    })
}

fn arb_keep() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set(prop::sample::select(vec!["a", "b", "c", "d"]), 0..5)
        .prop_map(|s| s.into_iter().map(String::from).collect())
}

proptest! {
    #[test]
    fn dfg_edge_mass(log in arb_log()) {
        let dfg = build_dfg(&log);
        let edges: u64 = dfg.edges().map(|(_, _, f)| f).sum();
        let expected: u64 = log
            .variants()
            .iter()
            .filter(|(t, _)| !t.is_empty())
            .map(|(t, c)| c * (t.len() as u64 - 1))
            .sum();
        prop_assert_eq!(edges, expected);
        let starts: u64 = dfg.activities().iter().map(|a| dfg.start_freq(a)).sum();
        let ends: u64 = dfg.activities().iter().map(|a| dfg.end_freq(a)).sum();
        prop_assert_eq!(starts + dfg.empty_traces(), log.total_traces());
        prop_assert_eq!(ends + dfg.empty_traces(), log.total_traces());
    }

    #[test]
    fn split_conserves_mass(log in arb_log(), mask in 1u32..15) {
        let labels: Vec<&String> = log.alphabet().iter().collect();
        prop_assume!(labels.len() >= 2);
        let n = labels.len();
        let mask = mask % ((1 << n) - 1);
        prop_assume!(mask != 0);
        let s1: BTreeSet<String> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| labels[i].clone()).collect();
        let s2: BTreeSet<String> = log.alphabet().difference(&s1).cloned().collect();
        let xor = Cut::new(Operator::Xor, s1.clone(), s2.clone()).unwrap();
        let (l, r) = split_log(&log, &xor).unwrap();
        prop_assert_eq!(l.total_traces() + r.total_traces(), log.total_traces());
        let par = Cut::new(Operator::Parallel, s1.clone(), s2.clone()).unwrap();
        let (l, r) = split_log(&log, &par).unwrap();
        prop_assert_eq!(l.total_traces(), log.total_traces());
        prop_assert_eq!(r.total_traces(), log.total_traces());
        let seq = Cut::new(Operator::Sequence, s1, s2).unwrap();
        let (l, r) = split_log(&log, &seq).unwrap();
        prop_assert_eq!(l.total_traces(), log.total_traces());
        prop_assert_eq!(r.total_traces(), log.total_traces());
    }

    #[test]
    fn projection_idempotent_and_monotone(log in arb_log(), k1 in arb_keep(), k2 in arb_keep()) {
        let once = project_log(&log, &k1);
        prop_assert_eq!(project_log(&once, &k1), once.clone());
        let small: BTreeSet<String> = k1.intersection(&k2).cloned().collect();
        let p_small = project_log(&log, &small);
        prop_assert!(p_small.alphabet().is_subset(once.alphabet()));
        prop_assert_eq!(project_log(&once, &small), p_small);
    }

    #[test]
    fn variants_round_trip(log in arb_log()) {
        prop_assert_eq!(parse_variants(&format_variants(&log)).unwrap(), log);
    }
}
