mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::oracles::{all_cuts, all_rules, cost_from_variants, forced_violation};
use common::{motivating_log, motivating_rules, trace};
use imr_core::declare::{DeclareRule, Template};
use imr_core::discovery::{
    cut_cost, discover, discover_traced, enumerate_cuts, forces_violation, pass_down_rules, rank_cuts,
    select_cut, Cut, DiscoveryParams, Operator,
};
use imr_core::log::{build_dfg, parse_variants, EventLog};
use imr_core::model::{accepts, model_satisfies, Verdict};
use imr_core::tree::ProcessTree;
use proptest::prelude::*;

fn set(v: &[&str]) -> BTreeSet<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn filter_table_matches_forced_violation_oracle() {
    let labels = ["a", "b", "c"];
    let mut mismatches = Vec::new();
    for rule in all_rules(&labels) {
        for cut in all_cuts(&labels) {
            if forces_violation(&rule, &cut).unwrap() != forced_violation(&rule, &cut) {
                mismatches.push(format!("{rule} vs {cut}"));
            }
        }
    }
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}

#[test]
fn cut_counts() {
    let abc = build_dfg(&parse_variants("1;a,b,c\n").unwrap());
    let cuts = enumerate_cuts(&abc).unwrap();
    let count = |op| cuts.iter().filter(|c| c.operator() == op).count();
    assert_eq!(
        [count(Operator::Sequence), count(Operator::Xor), count(Operator::Parallel), count(Operator::Loop)],
        [6, 3, 3, 6]
    );
    let top = enumerate_cuts(&build_dfg(&motivating_log())).unwrap();
    let rest = set(&["A-canceled", "Doc-checked", "Hist-checked", "A-accepted", "A-rejected"]);
    assert!(top.contains(&Cut::new(Operator::Sequence, set(&["A-created"]), rest).unwrap()));
}

#[test]
fn cost_examples() {
    // The cut leaves out A-created, so score it on the log below the first
    // sequence step.
    let inner = imr_core::log::project_log(
        &motivating_log(),
        &set(&["A-canceled", "Doc-checked", "Hist-checked", "A-accepted", "A-rejected"]),
    );
    let dfg = build_dfg(&inner);
    let cut = Cut::new(
        Operator::Xor,
        set(&["A-canceled", "A-accepted", "A-rejected"]),
        set(&["Doc-checked", "Hist-checked"]),
    )
    .unwrap();
    // Cross edges: Doc→Accepted 50, Doc→Rejected 80, Hist→Accepted 200, Hist→Rejected 335.
    assert_eq!(cut_cost(&cut, &dfg, 0.2).unwrap(), 50.0 + 80.0 + 200.0 + 335.0);
    assert_eq!(dfg.edge("Doc-checked", "A-accepted"), 50);
    assert_eq!(cut_cost(&cut, &dfg, 0.2).unwrap(), cost_from_variants(&cut, &inner, 0.2));
    let dfg = build_dfg(&motivating_log());
    for c in enumerate_cuts(&dfg).unwrap() {
        let dev_only = cost_from_variants(&c, &motivating_log(), 0.0);
        assert_eq!(cut_cost(&c, &dfg, 0.0).unwrap(), dev_only, "{c}");
    }
}

/// Minimum under (cost, operator, first side) by scanning all candidates.
fn brute_force_select(log: &EventLog, rules: &[DeclareRule], sup: f64) -> Option<Cut> {
    let dfg = build_dfg(log);
    enumerate_cuts(&dfg)
        .unwrap()
        .into_iter()
        .filter(|c| rules.iter().all(|r| !forces_violation(r, c).unwrap_or(false)))
        .map(|c| (cost_from_variants(&c, log, sup), c))
        .min_by(|x, y| {
            x.0.total_cmp(&y.0)
                .then(x.1.operator().cmp(&y.1.operator()))
                .then_with(|| {
                    let a: Vec<&String> = x.1.sigma1().iter().collect();
                    let b: Vec<&String> = y.1.sigma1().iter().collect();
                    a.cmp(&b)
                })
        })
        .map(|(_, c)| c)
}

#[test]
fn motivating_top_cut_is_the_exhaustive_minimum() {
    let log = motivating_log();
    let rules = motivating_rules();
    let dfg = build_dfg(&log);
    let chosen = select_cut(&enumerate_cuts(&dfg).unwrap(), &dfg, &rules, 0.2).unwrap();
    let rest = set(&["A-canceled", "Doc-checked", "Hist-checked", "A-accepted", "A-rejected"]);
    assert_eq!(chosen, Cut::new(Operator::Sequence, set(&["A-created"]), rest).unwrap());
    assert_eq!(brute_force_select(&log, &rules, 0.2), Some(chosen));
}

#[test]
fn motivating_discovery_honours_rules() {
    let start = Instant::now();
    let log = motivating_log();
    let rules = motivating_rules();
    let tree = discover(&log, &rules, &DiscoveryParams::default()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    for r in &rules {
        assert_eq!(model_satisfies(r, &tree, 0, 10).unwrap(), Verdict::Holds, "{r}");
    }
    for ok in [
        &["A-created", "A-canceled"][..],
        &["A-created", "Doc-checked", "Hist-checked", "A-accepted"],
        &["A-created", "Doc-checked", "Hist-checked", "A-rejected"],
    ] {
        assert!(accepts(&tree, &trace(ok)), "{ok:?}");
    }
    for bad in [
        &["A-created", "A-canceled", "A-accepted"][..],
        &["A-created", "Doc-checked", "Hist-checked", "A-rejected", "A-accepted"],
    ] {
        assert!(!accepts(&tree, &trace(bad)), "{bad:?}");
    }
    assert_eq!(
        tree.to_string(),
        "seq('A-created', xor(tau, seq(xor(tau, 'Doc-checked'), 'Hist-checked')), \
         xor('A-canceled', 'A-accepted', 'A-rejected'))"
    );
}

#[test]
fn baseline_violates_knowledge() {
    let log = motivating_log();
    let rules = motivating_rules();
    let baseline = discover(&log, &[], &DiscoveryParams::default()).unwrap();
    let guided = discover(&log, &rules, &DiscoveryParams::default()).unwrap();
    assert_ne!(baseline, guided);
    assert!(rules
        .iter()
        .any(|r| !model_satisfies(r, &baseline, 2, 8).unwrap().holds()));
}

#[test]
fn pass_down_examples() {
    let rest = set(&["A-canceled", "Doc-checked", "Hist-checked", "A-accepted", "A-rejected"]);
    let seq = Cut::new(Operator::Sequence, set(&["A-created"]), rest).unwrap();
    let resp = DeclareRule::binary(Template::Response, "Doc-checked", "Hist-checked");
    let (l, r) = pass_down_rules(std::slice::from_ref(&resp), &seq, false);
    assert!(l.is_empty());
    assert_eq!(r, vec![resp]);

    let xor = Cut::new(Operator::Xor, set(&["A-accepted"]), set(&["A-rejected"])).unwrap();
    let nce = DeclareRule::binary(Template::NotCoExistence, "A-accepted", "A-rejected");
    let (l, r) = pass_down_rules(&[nce], &xor, false);
    assert!(l.is_empty() && r.is_empty());

    let cut = Cut::new(Operator::Sequence, set(&["Correct Claim"]), set(&["Payment Order"])).unwrap();
    let am = DeclareRule::unary(Template::AtMost, "Correct Claim");
    let (l, r) = pass_down_rules(std::slice::from_ref(&am), &cut, false);
    assert_eq!((l, r.len()), (vec![am], 0));
}

#[test]
fn flower_when_everything_is_forbidden() {
    let log = parse_variants("3;a,b\n3;b,a\n").unwrap();
    let rules = [
        DeclareRule::unary(Template::Existence, "a"),
        DeclareRule::unary(Template::AtMost, "a"),
        DeclareRule::binary(Template::NotCoExistence, "a", "b"),
    ];
    let t = discover(&log, &rules, &DiscoveryParams::default()).unwrap();
    let flower = ProcessTree::looped(
        ProcessTree::xor(vec![ProcessTree::activity("a"), ProcessTree::activity("b")]),
        ProcessTree::Silent,
    );
    assert_eq!(t, flower);
}

#[test]
fn deterministic_across_worker_counts() {
    let log = motivating_log();
    let rules = motivating_rules();
    let base = discover(&log, &rules, &DiscoveryParams::default()).unwrap().to_string();
    for workers in [Some(1), Some(2), Some(3), Some(8), None] {
        let p = DiscoveryParams { workers, ..DiscoveryParams::default() };
        assert_eq!(discover(&log, &rules, &p).unwrap().to_string(), base);
    }
}

#[test]
fn guided_candidates_above_the_exhaustive_limit() {
    let text = common::fixture("claims/log.variants");
    let log = parse_variants(&text).unwrap();
    assert!(log.alphabet().len() > 12);
    let mut rules = imr_core::declare::parse_rules(&common::fixture("claims/rules_initial.txt")).unwrap();
    rules.extend(imr_core::declare::parse_rules(&common::fixture("claims/rules_feedback.txt")).unwrap());
    let t = discover(&log, &rules, &DiscoveryParams::default()).unwrap();
    assert_eq!(t.alphabet(), *log.alphabet());
    assert_eq!(t.leaves().len(), log.alphabet().len());
}

const LABELS: [&str; 4] = ["a", "b", "c", "d"];

fn arb_log() -> impl Strategy<Value = EventLog> {
    let trace = prop::collection::vec(prop::sample::select(LABELS.to_vec()), 0..6);
    prop::collection::vec((trace, 1u64..30), 1..8).prop_map(|pairs| {
        EventLog::from_counts(pairs.into_iter().map(|(t, c)| (t.into_iter().map(String::from).collect(), c)))
    })
}

fn arb_rules() -> impl Strategy<Value = Vec<DeclareRule>> {
    prop::collection::vec(prop::sample::select(all_rules(&LABELS)), 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn leaves_cover_alphabet_once(log in arb_log(), rules in arb_rules()) {
        let t = discover(&log, &rules, &DiscoveryParams::default()).unwrap();
        let leaves = t.leaves();
        let distinct: BTreeSet<&str> = leaves.iter().copied().collect();
        prop_assert_eq!(leaves.len(), distinct.len(), "{}", t);
        prop_assert_eq!(t.alphabet(), log.alphabet().clone());
        prop_assert!(t.is_well_formed());
    }

    #[test]
    fn schedule_independent(log in arb_log(), rules in arb_rules()) {
        let seq = DiscoveryParams { workers: Some(1), ..DiscoveryParams::default() };
        let par = DiscoveryParams { workers: Some(4), ..DiscoveryParams::default() };
        prop_assert_eq!(discover(&log, &rules, &seq).unwrap(), discover(&log, &rules, &par).unwrap());
    }

    #[test]
    fn more_rules_never_widen_survivors(log in arb_log(), r1 in arb_rules(), r2 in arb_rules()) {
        let dfg = build_dfg(&log);
        prop_assume!(dfg.len() >= 2);
        let cands = enumerate_cuts(&dfg).unwrap();
        let few: BTreeSet<Cut> = rank_cuts(&cands, &dfg, &r1, 0.2).into_iter().map(|x| x.1).collect();
        let both: Vec<DeclareRule> = r1.iter().chain(&r2).cloned().collect();
        let more: BTreeSet<Cut> = rank_cuts(&cands, &dfg, &both, 0.2).into_iter().map(|x| x.1).collect();
        prop_assert!(more.is_subset(&few));
    }

    #[test]
    fn selection_matches_brute_force(log in arb_log(), rules in arb_rules(), sup in 0.0f64..=1.0) {
        let dfg = build_dfg(&log);
        prop_assume!(dfg.len() >= 2);
        let scoped: Vec<DeclareRule> = rules
            .into_iter()
            .filter(|r| r.args().iter().all(|a| log.alphabet().contains(a)))
            .collect();
        let chosen = select_cut(&enumerate_cuts(&dfg).unwrap(), &dfg, &scoped, sup);
        prop_assert_eq!(chosen, brute_force_select(&log, &scoped, sup));
    }

    #[test]
    fn guaranteed_discharges_hold(log in arb_log(), rules in arb_rules()) {
        let found = discover_traced(&log, &rules, &DiscoveryParams::default()).unwrap();
        for step in &found.steps {
            for r in &rules {
                let (Some(sa), Some(sb)) = (step.cut.side_of(r.first()), r.second().and_then(|b| step.cut.side_of(b))) else {
                    continue;
                };
                let guaranteed = match (r.template(), step.cut.operator()) {
                    (Template::NotCoExistence, Operator::Xor) => sa != sb,
                    (Template::NotSuccession, Operator::Sequence) => {
                        sb == imr_core::discovery::Side::First && sa == imr_core::discovery::Side::Second
                    }
                    _ => false,
                };
                if guaranteed {
                    let v = model_satisfies(r, &found.tree, 2, 8).unwrap();
                    prop_assert!(v.holds(), "{} on {}: {:?}", r, found.tree, v);
                }
            }
        }
    }
}
