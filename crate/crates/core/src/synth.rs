//! Seeded random trees and logs played out from them, for stress tests and
//! benchmarks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discovery::Operator;
use crate::log::{EventLog, Trace};
use crate::tree::ProcessTree;

/// Random tree over `n` activities named `a00`, `a01`, ... Each label
/// appears exactly once.
pub fn random_tree(n: usize, seed: u64) -> ProcessTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<String> = (0..n).map(|i| format!("a{i:02}")).collect();
    labels.shuffle(&mut rng);
    build(&labels, &mut rng)
}

fn build(labels: &[String], rng: &mut ChaCha8Rng) -> ProcessTree {
    if labels.len() == 1 {
        return ProcessTree::activity(labels[0].clone());
    }
    let split = rng.gen_range(1..labels.len());
    let (left, right) = labels.split_at(split);
    let left = build(left, rng);
    let right = build(right, rng);
    // Sequences dominate real processes; loops are kept rare.
    let op = match rng.gen_range(0..10) {
        0..=4 => Operator::Sequence,
        5..=6 => Operator::Xor,
        7..=8 => Operator::Parallel,
        _ => Operator::Loop,
    };
    ProcessTree::node(op, vec![left, right])
}

/// Plays out `traces` random executions of the tree. Loops repeat with
/// probability 0.3 per iteration, at most three times.
pub fn play_out(tree: &ProcessTree, traces: u64, seed: u64) -> EventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<Trace, u64> = BTreeMap::new();
    for _ in 0..traces {
        *counts.entry(run(tree, &mut rng)).or_default() += 1;
    }
    EventLog::from_counts(counts)
}

fn run(node: &ProcessTree, rng: &mut ChaCha8Rng) -> Trace {
    match node {
        ProcessTree::Activity(a) => vec![a.clone()],
        ProcessTree::Silent => Vec::new(),
        ProcessTree::Operator(Operator::Sequence, children) => {
            children.iter().flat_map(|c| run(c, rng)).collect()
        }
        ProcessTree::Operator(Operator::Xor, children) => {
            let pick = rng.gen_range(0..children.len());
            run(&children[pick], rng)
        }
        ProcessTree::Operator(Operator::Parallel, children) => {
            let mut queues: Vec<std::collections::VecDeque<String>> =
                children.iter().map(|c| run(c, rng).into()).collect();
            let mut out = Vec::new();
            loop {
                let live: Vec<usize> = (0..queues.len()).filter(|&k| !queues[k].is_empty()).collect();
                let Some(&k) = live.choose(rng) else { break };
                out.push(queues[k].pop_front().unwrap());
            }
            out
        }
        ProcessTree::Operator(Operator::Loop, children) => {
            let mut out = run(&children[0], rng);
            for _ in 0..3 {
                if !rng.gen_bool(0.3) {
                    break;
                }
                out.extend(run(&children[1], rng));
                out.extend(run(&children[0], rng));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::accepts;

    #[test]
    fn seeded_and_fitting() {
        let t = random_tree(8, 7);
        assert_eq!(t, random_tree(8, 7));
        assert_eq!(t.leaves().len(), 8);
        let log = play_out(&t, 500, 1);
        assert_eq!(log, play_out(&t, 500, 1));
        assert_eq!(log.total_traces(), 500);
        assert!(log.variants().keys().all(|v| accepts(&t, v)));
    }
}
