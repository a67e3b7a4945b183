#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use imr_core::declare::{parse_rules, DeclareRule};
use imr_core::log::{parse_variants, EventLog};
use imr_llm::ScriptedTransport;

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn log(rel: &str) -> EventLog {
    parse_variants(&fixture(rel)).unwrap()
}

pub fn rules(rel: &str) -> Vec<DeclareRule> {
    parse_rules(&fixture(rel)).unwrap()
}

pub fn script(name: &str) -> ScriptedTransport {
    ScriptedTransport::load(&fixture_path(&format!("transcripts/{name}.json"))).unwrap()
}

pub fn labels(v: &[&str]) -> BTreeSet<String> {
    v.iter().map(|s| s.to_string()).collect()
}
