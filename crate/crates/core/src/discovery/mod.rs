//! Rule-guided inductive discovery.
//!
//! Each recursion step builds the DFG of the current sub-log, enumerates
//! binary cuts, drops the cuts that force a rule violation, scores the rest
//! and splits the log along the cheapest one. Rules whose activities end up
//! on opposite sides of the chosen cut are discharged; the others travel with
//! their activities into the sub-logs.

mod cost;
mod cuts;
mod filter;

use std::collections::BTreeSet;

use thiserror::Error;

pub use cost::cut_cost;
pub use cuts::{enumerate_cuts, enumerate_cuts_limited, Cut, Operator, Side, EXHAUSTIVE_LIMIT};
pub use filter::{forces_violation, is_forbidden};

use crate::declare::{DeclareRule, Template};
use crate::log::{build_dfg, split_log, Dfg, EventLog};
use crate::par::{self, Exec};
use crate::tree::ProcessTree;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DiscoveryError {
    #[error("cut needs at least two activities")]
    AlphabetTooSmall,
    #[error("sides are empty, overlap, or do not cover the alphabet")]
    InvalidPartition,
    #[error("activity `{0}` is not part of the cut")]
    LabelNotInScope(String),
    #[error("recursion deeper than {0} levels")]
    DepthLimitExceeded(usize),
    #[error("sup must lie in [0, 1], got {0}")]
    InvalidSup(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryParams {
    /// Weight of estimated missing edges, in [0, 1].
    pub sup: f64,
    pub max_depth: usize,
    /// Alphabets up to this size get exhaustive cut enumeration.
    pub exhaustive_limit: usize,
    /// When a sequence cut discharges `response(a, b)` (or
    /// `precedence(a, b)`), also require `b` (or `a`) on its side.
    pub strict_discharge: bool,
    /// Worker threads; `Some(1)` runs sequentially, `None` uses the global
    /// pool.
    pub workers: Option<usize>,
}

impl Default for DiscoveryParams {
    fn default() -> Self {
        Self {
            sup: 0.2,
            max_depth: 256,
            exhaustive_limit: EXHAUSTIVE_LIMIT,
            strict_discharge: false,
            workers: None,
        }
    }
}

impl DiscoveryParams {
    pub fn with_sup(sup: f64) -> Self {
        Self { sup, ..Self::default() }
    }

    fn validate(&self) -> Result<(), DiscoveryError> {
        if (0.0..=1.0).contains(&self.sup) {
            Ok(())
        } else {
            Err(DiscoveryError::InvalidSup(self.sup.to_string()))
        }
    }
}

/// Rules whose activities all occur in the alphabet.
fn in_scope<'a>(rules: &'a [DeclareRule], alphabet: &BTreeSet<String>) -> Vec<&'a DeclareRule> {
    rules
        .iter()
        .filter(|r| r.args().iter().all(|a| alphabet.contains(a)))
        .collect()
}

/// Surviving candidates with their cost, cheapest first; ties follow the
/// cut order (operator, then first side).
pub fn rank_cuts(
    candidates: &[Cut],
    dfg: &Dfg,
    rules: &[DeclareRule],
    sup: f64,
) -> Vec<(f64, Cut)> {
    rank_cuts_with(Exec::Parallel, candidates, dfg, rules, sup)
}

/// [`rank_cuts`] with an explicit execution mode.
pub fn rank_cuts_with(
    exec: Exec,
    candidates: &[Cut],
    dfg: &Dfg,
    rules: &[DeclareRule],
    sup: f64,
) -> Vec<(f64, Cut)> {
    let alphabet: BTreeSet<String> = dfg.activities().iter().cloned().collect();
    let scoped: Vec<DeclareRule> = in_scope(rules, &alphabet).into_iter().cloned().collect();
    let scored = par::map_with(exec, candidates, |cut| {
        if !cut.covers(&alphabet) || is_forbidden(&scoped, cut) {
            return None;
        }
        let mask: Vec<bool> = dfg
            .activities()
            .iter()
            .map(|a| cut.sigma1().contains(a))
            .collect();
        Some(cost::cost_by_mask(cut.operator(), &mask, dfg, sup))
    });
    let mut ranked: Vec<(f64, Cut)> = scored
        .into_iter()
        .zip(candidates)
        .filter_map(|(c, cut)| c.map(|c| (c, cut.clone())))
        .collect();
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
    ranked
}

/// Cheapest candidate that no applicable rule forbids.
pub fn select_cut(candidates: &[Cut], dfg: &Dfg, rules: &[DeclareRule], sup: f64) -> Option<Cut> {
    rank_cuts(candidates, dfg, rules, sup)
        .into_iter()
        .next()
        .map(|(_, c)| c)
}

/// Rules for the two sub-logs of a cut. Separated binary rules are dropped.
pub fn pass_down_rules(
    rules: &[DeclareRule],
    cut: &Cut,
    strict_discharge: bool,
) -> (Vec<DeclareRule>, Vec<DeclareRule>) {
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut push = |side: Side, rule: DeclareRule| match side {
        Side::First => first.push(rule),
        Side::Second => second.push(rule),
    };
    for rule in rules {
        let sides: Option<Vec<Side>> = rule.args().iter().map(|a| cut.side_of(a)).collect();
        let Some(sides) = sides else { continue };
        match sides.as_slice() {
            [s] => push(*s, rule.clone()),
            [s, t] if s == t => push(*s, rule.clone()),
            [s, t] => {
                if strict_discharge && cut.operator() == Operator::Sequence && *s == Side::First {
                    let b = rule.second().unwrap();
                    match rule.template() {
                        Template::Response => {
                            push(*t, DeclareRule::unary(Template::Existence, b));
                        }
                        Template::Precedence => {
                            push(*s, DeclareRule::unary(Template::Existence, rule.first()));
                        }
                        _ => {}
                    }
                }
            }
            _ => {}
        }
    }
    dedup_in_order(&mut first);
    dedup_in_order(&mut second);
    (first, second)
}

fn dedup_in_order(rules: &mut Vec<DeclareRule>) {
    let mut seen = BTreeSet::new();
    rules.retain(|r| seen.insert(r.clone()));
}

/// One chosen cut, recorded in pre-order (parent before its sub-logs, first
/// side before second).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryStep {
    pub depth: usize,
    pub cut: Cut,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discovery {
    pub tree: ProcessTree,
    pub steps: Vec<DiscoveryStep>,
}

impl Discovery {
    /// The cut chosen on the whole log, if any.
    pub fn top_cut(&self) -> Option<&DiscoveryStep> {
        self.steps.first().filter(|s| s.depth == 0)
    }
}

pub fn discover(
    log: &EventLog,
    rules: &[DeclareRule],
    params: &DiscoveryParams,
) -> Result<ProcessTree, DiscoveryError> {
    discover_traced(log, rules, params).map(|d| d.tree)
}

/// Like [`discover`], also returning the chosen cuts.
pub fn discover_traced(
    log: &EventLog,
    rules: &[DeclareRule],
    params: &DiscoveryParams,
) -> Result<Discovery, DiscoveryError> {
    params.validate()?;
    let exec = Exec::for_workers(params.workers);
    par::install(params.workers, || {
        let mut steps = Vec::new();
        let tree = recurse(log, rules, params, exec, 0, &mut steps)?;
        Ok(Discovery { tree, steps })
    })
}

fn flower(alphabet: &BTreeSet<String>) -> ProcessTree {
    let leaves: Vec<ProcessTree> = alphabet.iter().map(ProcessTree::activity).collect();
    ProcessTree::looped(ProcessTree::xor(leaves), ProcessTree::Silent)
}

fn recurse(
    log: &EventLog,
    rules: &[DeclareRule],
    params: &DiscoveryParams,
    exec: Exec,
    depth: usize,
    steps: &mut Vec<DiscoveryStep>,
) -> Result<ProcessTree, DiscoveryError> {
    if depth > params.max_depth {
        return Err(DiscoveryError::DepthLimitExceeded(params.max_depth));
    }
    if log.alphabet().is_empty() {
        return Ok(ProcessTree::Silent);
    }
    let has_empty = log.empty_traces() > 0;
    // An existence rule in scope turns empty traces into deviations instead
    // of making the whole subtree optional.
    let must_occur = rules
        .iter()
        .any(|r| r.template() == Template::Existence && log.alphabet().contains(r.first()));
    let wrap = |t: ProcessTree| if has_empty && !must_occur { t.optional() } else { t };
    let core = if has_empty {
        log.without_empty_traces()
    } else {
        log.clone()
    };

    if core.alphabet().len() == 1 {
        let a = core.alphabet().iter().next().unwrap().clone();
        let repeats = core.variants().keys().any(|t| t.len() > 1);
        let at_most = rules
            .iter()
            .any(|r| r.template() == Template::AtMost && r.first() == a);
        return Ok(match (repeats, at_most) {
            (false, _) => wrap(ProcessTree::activity(a)),
            (true, true) if must_occur => ProcessTree::activity(a),
            (true, true) => ProcessTree::activity(a).optional(),
            (true, false) => wrap(ProcessTree::looped(ProcessTree::activity(a), ProcessTree::Silent)),
        });
    }

    let dfg = build_dfg(&core);
    let candidates = enumerate_cuts_limited(&dfg, params.exhaustive_limit)?;
    let scoped: Vec<DeclareRule> = in_scope(rules, core.alphabet()).into_iter().cloned().collect();
    let ranked = rank_cuts_with(exec, &candidates, &dfg, &scoped, params.sup);

    // A cut whose split leaves one of its activities in no sub-log would drop
    // that activity from the model; fall through to the next candidate.
    let chosen = ranked.into_iter().find_map(|(cost, cut)| {
        let (l, r) = split_log(&core, &cut).ok()?;
        (l.alphabet() == cut.sigma1() && r.alphabet() == cut.sigma2()).then_some((cost, cut, l, r))
    });
    let Some((cost, cut, left_log, right_log)) = chosen else {
        return Ok(wrap(flower(core.alphabet())));
    };

    steps.push(DiscoveryStep { depth, cut: cut.clone(), cost });
    let (left_rules, right_rules) = pass_down_rules(&scoped, &cut, params.strict_discharge);
    let mut left_steps = Vec::new();
    let mut right_steps = Vec::new();
    let (left, right) = par::join_with(
        exec,
        || recurse(&left_log, &left_rules, params, exec, depth + 1, &mut left_steps),
        || recurse(&right_log, &right_rules, params, exec, depth + 1, &mut right_steps),
    );
    steps.extend(left_steps);
    steps.extend(right_steps);
    let node = ProcessTree::node(cut.operator(), vec![left?, right?]);
    Ok(wrap(node))
}
