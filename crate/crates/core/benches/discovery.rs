//! Sequential versus rayon execution for the three hot paths: cut scoring,
//! rule mining, and the full recursion.
//!
//! Run with `cargo bench -p imr-core`. Building with
//! `--no-default-features` removes rayon; both variants then run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use imr_core::declare::mine_rules_with;
use imr_core::discovery::{discover, enumerate_cuts, rank_cuts_with, DiscoveryParams};
use imr_core::log::build_dfg;
use imr_core::par::Exec;
use imr_core::synth::{play_out, random_tree};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn cut_scoring(c: &mut Criterion) {
    let log = play_out(&random_tree(12, 3), 20_000, 3);
    let dfg = build_dfg(&log);
    let cuts = enumerate_cuts(&dfg).unwrap();
    let mut g = c.benchmark_group("cut_scoring_12_activities");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| rank_cuts_with(exec, &cuts, &dfg, &[], 0.2))
        });
    }
    g.finish();
}

fn rule_mining(c: &mut Criterion) {
    let log = play_out(&random_tree(16, 5), 20_000, 5);
    let mut g = c.benchmark_group("rule_mining_16_activities");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mine_rules_with(exec, &log, 0.9).unwrap())
        });
    }
    g.finish();
}

fn recursion(c: &mut Criterion) {
    let log = play_out(&random_tree(10, 9), 20_000, 9);
    let mut g = c.benchmark_group("discover_10_activities");
    g.sample_size(10);
    for (name, workers) in [("sequential", Some(1)), ("parallel", None)] {
        let params = DiscoveryParams { workers, ..DiscoveryParams::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| discover(&log, &[], &params).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, cut_scoring, rule_mining, recursion);
criterion_main!(benches);
