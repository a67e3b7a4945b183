#![allow(dead_code)]

pub mod oracles;

use std::path::PathBuf;

use imr_core::declare::{parse_rules, DeclareRule};
use imr_core::log::{parse_variants, EventLog};
use imr_core::tree::ProcessTree as T;

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn motivating_log() -> EventLog {
    parse_variants(&fixture("motivating/log.variants")).unwrap()
}

pub fn motivating_rules() -> Vec<DeclareRule> {
    parse_rules(&fixture("motivating/rules.txt")).unwrap()
}

pub fn trace(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

/// The hand-drawn target model for the motivating example.
pub fn reference_tree() -> T {
    T::seq(vec![
        T::activity("A-created"),
        T::xor(vec![
            T::activity("A-canceled"),
            T::seq(vec![
                T::activity("Doc-checked"),
                T::activity("Hist-checked"),
                T::xor(vec![T::activity("A-accepted"), T::activity("A-rejected")]),
            ]),
        ]),
    ])
}
