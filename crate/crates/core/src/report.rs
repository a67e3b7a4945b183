//! Discovery plus rule verification, shared by the command line and the
//! service so both produce the same output for the same inputs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::declare::DeclareRule;
use crate::discovery::{discover_traced, DiscoveryError, DiscoveryParams};
use crate::log::EventLog;
use crate::model::{enumerate_language_capped, verdict_on, Verdict};
use crate::tree::ProcessTree;

/// Loop unrolling used when verifying rules on a discovered model.
pub const VERIFY_LOOP_BOUND: usize = 2;
/// Verification length cap is the longest log trace plus this slack.
pub const VERIFY_LENGTH_SLACK: usize = 4;
/// Languages larger than this are reported as unchecked rather than
/// enumerated.
pub const VERIFY_LANGUAGE_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RuleVerdict {
    Holds { exact: bool },
    Violated { witness: Vec<String> },
    Unchecked { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCheck {
    pub rule: DeclareRule,
    #[serde(flatten)]
    pub verdict: RuleVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub tree: ProcessTree,
    pub alphabet_size: usize,
    pub variants: usize,
    pub traces: u64,
    pub sup: f64,
    pub top_cut: Option<String>,
    pub checks: Vec<RuleCheck>,
}

pub fn run_discovery(
    log: &EventLog,
    rules: &[DeclareRule],
    params: &DiscoveryParams,
) -> Result<DiscoveryReport, DiscoveryError> {
    let found = discover_traced(log, rules, params)?;
    let checks = verify_rules(&found.tree, rules, verify_max_len(log));
    Ok(DiscoveryReport {
        alphabet_size: log.alphabet().len(),
        variants: log.num_variants(),
        traces: log.total_traces(),
        sup: params.sup,
        top_cut: found.top_cut().map(|s| s.cut.to_string()),
        tree: found.tree,
        checks,
    })
}

pub fn verify_max_len(log: &EventLog) -> usize {
    log.variants().keys().map(Vec::len).max().unwrap_or(0) + VERIFY_LENGTH_SLACK
}

pub fn verify_rules(tree: &ProcessTree, rules: &[DeclareRule], max_len: usize) -> Vec<RuleCheck> {
    let lang = enumerate_language_capped(tree, VERIFY_LOOP_BOUND, max_len, VERIFY_LANGUAGE_CAP);
    rules
        .iter()
        .map(|rule| {
            let verdict = match &lang {
                Err(e) => RuleVerdict::Unchecked { reason: e.to_string() },
                Ok(l) => match verdict_on(rule, l) {
                    Verdict::Holds => RuleVerdict::Holds { exact: l.exact },
                    Verdict::Violated(w) => RuleVerdict::Violated { witness: w },
                },
            };
            RuleCheck { rule: rule.clone(), verdict }
        })
        .collect()
}

impl DiscoveryReport {
    pub fn all_rules_hold(&self) -> bool {
        self.checks
            .iter()
            .all(|c| matches!(c.verdict, RuleVerdict::Holds { .. }))
    }

    /// Human-readable summary printed after discovery.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(s, "activities: {}", self.alphabet_size).unwrap();
        writeln!(s, "variants:   {} ({} traces)", self.variants, self.traces).unwrap();
        writeln!(s, "sup:        {}", self.sup).unwrap();
        match &self.top_cut {
            Some(c) => writeln!(s, "top cut:    {c}").unwrap(),
            None => writeln!(s, "top cut:    none (base case or fall-through)").unwrap(),
        }
        writeln!(s, "model:      {}", self.tree).unwrap();
        if self.checks.is_empty() {
            writeln!(s, "rules:      none").unwrap();
        }
        for c in &self.checks {
            let v = match &c.verdict {
                RuleVerdict::Holds { exact: true } => "holds".to_string(),
                RuleVerdict::Holds { exact: false } => "holds (bounded)".to_string(),
                RuleVerdict::Violated { witness } => format!("violated by <{}>", witness.join(", ")),
                RuleVerdict::Unchecked { reason } => format!("unchecked: {reason}"),
            };
            writeln!(s, "  {}: {v}", c.rule).unwrap();
        }
        s
    }
}
