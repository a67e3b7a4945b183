//! Independent reference implementations used by the property and acceptance
//! tests. Nothing here calls into the library's evaluation code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use imr_core::declare::{DeclareRule, Template};
use imr_core::discovery::{Cut, Operator};
use imr_core::log::EventLog;

/// Template semantics as first-order formulas, evaluated by brute force over
/// positions.
pub fn holds_by_quantifiers(rule: &DeclareRule, t: &[String]) -> bool {
    let n = t.len();
    let a = rule.first();
    let b = rule.second().unwrap_or("");
    let at = |i: usize, l: &str| t[i] == l;
    let some = |l: &str| (0..n).any(|i| at(i, l));
    match rule.template() {
        Template::AtMost => !(0..n).any(|i| (i + 1..n).any(|j| at(i, a) && at(j, a))),
        Template::Existence => some(a),
        Template::Response => (0..n).all(|i| !at(i, a) || (i + 1..n).any(|j| at(j, b))),
        Template::Precedence => (0..n).all(|j| !at(j, b) || (0..j).any(|i| at(i, a))),
        Template::CoExistence => some(a) == some(b),
        Template::NotCoExistence => !(0..n).any(|i| (0..n).any(|j| at(i, a) && at(j, b))),
        Template::NotSuccession => !(0..n).any(|i| (i + 1..n).any(|j| at(i, a) && at(j, b))),
        Template::RespondedExistence => !some(a) || some(b),
    }
}

/// Every rule over the given labels: both unary templates per label and all
/// six binary templates per ordered pair.
pub fn all_rules(labels: &[&str]) -> Vec<DeclareRule> {
    let mut out = Vec::new();
    for t in Template::ALL {
        if t.arity() == 1 {
            out.extend(labels.iter().map(|a| DeclareRule::unary(t, *a)));
        } else {
            for a in labels {
                for b in labels.iter().filter(|b| *b != a) {
                    out.push(DeclareRule::binary(t, *a, *b));
                }
            }
        }
    }
    out
}

/// Every cut over the labels: ordered bipartitions for sequence and loop,
/// unordered for xor and parallel.
pub fn all_cuts(labels: &[&str]) -> Vec<Cut> {
    let n = labels.len();
    let mut out = Vec::new();
    for mask in 1..(1u32 << n) - 1 {
        let s1: BTreeSet<String> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| labels[i].to_string()).collect();
        let s2: BTreeSet<String> = (0..n).filter(|i| mask >> i & 1 == 0).map(|i| labels[i].to_string()).collect();
        for op in Operator::ALL {
            let cut = Cut::new(op, s1.clone(), s2.clone()).unwrap();
            if !out.contains(&cut) {
                out.push(cut);
            }
        }
    }
    out
}

type Lang = BTreeSet<Vec<String>>;

fn words(alphabet: &[String], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for a in alphabet {
                let mut v: Vec<String> = w.clone();
                v.push(a.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Languages over the alphabet with at most `alphabet.len()` traces of length
/// ≤ `max_len`, in which every letter occurs. Every covering language
/// contains one of these, and violations only grow with the language, so
/// they decide the forced-violation question.
pub fn covering_languages(alphabet: &BTreeSet<String>, max_len: usize) -> Vec<Lang> {
    let letters: Vec<String> = alphabet.iter().cloned().collect();
    let pool: Vec<Vec<String>> = words(&letters, max_len).into_iter().filter(|w| !w.is_empty()).collect();
    let mut out = Vec::new();
    let mut pick = Vec::new();
    choose(&pool, 0, letters.len(), &mut pick, &mut |chosen: &[&Vec<String>]| {
        let covered: BTreeSet<&String> = chosen.iter().flat_map(|w| w.iter()).collect();
        if covered.len() == letters.len() {
            out.push(chosen.iter().map(|w| (*w).clone()).collect());
        }
    });
    out
}

fn choose<'a>(
    pool: &'a [Vec<String>],
    from: usize,
    left: usize,
    pick: &mut Vec<&'a Vec<String>>,
    visit: &mut impl FnMut(&[&Vec<String>]),
) {
    if !pick.is_empty() {
        visit(pick);
    }
    if left == 0 {
        return;
    }
    for i in from..pool.len() {
        pick.push(&pool[i]);
        choose(pool, i + 1, left - 1, pick, visit);
        pick.pop();
    }
}

fn shuffles(x: &[String], y: &[String], prefix: &mut Vec<String>, out: &mut Lang) {
    if x.is_empty() || y.is_empty() {
        let mut t = prefix.clone();
        t.extend_from_slice(x);
        t.extend_from_slice(y);
        out.insert(t);
        return;
    }
    prefix.push(x[0].clone());
    shuffles(&x[1..], y, prefix, out);
    prefix.pop();
    prefix.push(y[0].clone());
    shuffles(x, &y[1..], prefix, out);
    prefix.pop();
}

fn concat(x: &Lang, y: &Lang) -> Lang {
    x.iter()
        .flat_map(|u| y.iter().map(move |v| u.iter().chain(v).cloned().collect()))
        .collect()
}

/// Composition of two side languages; loops unrolled up to two redos.
pub fn compose(op: Operator, l1: &Lang, l2: &Lang) -> Lang {
    match op {
        Operator::Sequence => concat(l1, l2),
        Operator::Xor => l1.union(l2).cloned().collect(),
        Operator::Parallel => {
            let mut out = Lang::new();
            for x in l1 {
                for y in l2 {
                    shuffles(x, y, &mut Vec::new(), &mut out);
                }
            }
            out
        }
        Operator::Loop => {
            let mut out = l1.clone();
            let once = concat(&concat(l1, l2), l1);
            out.extend(once.iter().cloned());
            out.extend(concat(&concat(&once, l2), l1));
            out
        }
    }
}

/// True iff every pair of covering side languages composes to a language
/// with a trace that violates the rule.
pub fn forced_violation(rule: &DeclareRule, cut: &Cut) -> bool {
    let left = covering_languages(cut.sigma1(), 3);
    let right = covering_languages(cut.sigma2(), 3);
    left.iter().all(|l1| {
        right.iter().all(|l2| {
            compose(cut.operator(), l1, l2)
                .iter()
                .any(|t| !holds_by_quantifiers(rule, t))
        })
    })
}

/// Cut cost computed straight from the variants, without a DFG.
pub fn cost_from_variants(cut: &Cut, log: &EventLog, sup: f64) -> f64 {
    let mut edges: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut start: BTreeMap<String, u64> = BTreeMap::new();
    let mut end: BTreeMap<String, u64> = BTreeMap::new();
    for (trace, &count) in log.variants() {
        for w in trace.windows(2) {
            *edges.entry((w[0].clone(), w[1].clone())).or_default() += count;
        }
        if let (Some(f), Some(l)) = (trace.first(), trace.last()) {
            *start.entry(f.clone()).or_default() += count;
            *end.entry(l.clone()).or_default() += count;
        }
    }
    let f = |x: &String, y: &String| edges.get(&(x.clone(), y.clone())).copied().unwrap_or(0);
    let total: u64 = edges.values().sum();
    let mbar = if edges.is_empty() { 0 } else { total.div_ceil(edges.len() as u64) };
    let unit = sup * mbar as f64;
    let (s1, s2) = (cut.sigma1(), cut.sigma2());
    let sum = |from: &BTreeSet<String>, to: &BTreeSet<String>| -> u64 {
        from.iter().flat_map(|x| to.iter().map(move |y| (x, y))).map(|(x, y)| f(x, y)).sum()
    };
    let zero_pairs = |from: &BTreeSet<String>, to: &BTreeSet<String>| -> usize {
        from.iter().flat_map(|x| to.iter().map(move |y| (x, y))).filter(|(x, y)| f(x, y) == 0).count()
    };
    match cut.operator() {
        Operator::Sequence => {
            let stuck = s1
                .iter()
                .filter(|x| s2.iter().all(|y| f(x, y) == 0) && end.get(*x).copied().unwrap_or(0) == 0)
                .count();
            sum(s2, s1) as f64 + unit * stuck as f64
        }
        Operator::Xor => (sum(s1, s2) + sum(s2, s1)) as f64,
        Operator::Parallel => unit * (zero_pairs(s1, s2) + zero_pairs(s2, s1)) as f64,
        Operator::Loop => {
            let dev: u64 = s2
                .iter()
                .map(|y| start.get(y).copied().unwrap_or(0) + end.get(y).copied().unwrap_or(0))
                .sum();
            let no_out = s2.iter().filter(|x| s1.iter().all(|y| f(x, y) == 0)).count();
            let no_in = s2.iter().filter(|x| s1.iter().all(|y| f(y, x) == 0)).count();
            dev as f64 + unit * (no_out + no_in) as f64
        }
    }
}
