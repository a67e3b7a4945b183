//! The eight Declare templates understood by the discovery filter: trace
//! semantics, confidence over a log, a text grammar, validation against a log
//! alphabet and a small exhaustive miner.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::log::EventLog;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Template {
    AtMost,
    Existence,
    Response,
    Precedence,
    CoExistence,
    NotCoExistence,
    NotSuccession,
    RespondedExistence,
}

impl Template {
    pub const ALL: [Template; 8] = [
        Template::AtMost,
        Template::Existence,
        Template::Response,
        Template::Precedence,
        Template::CoExistence,
        Template::NotCoExistence,
        Template::NotSuccession,
        Template::RespondedExistence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::AtMost => "at-most",
            Template::Existence => "existence",
            Template::Response => "response",
            Template::Precedence => "precedence",
            Template::CoExistence => "co-existence",
            Template::NotCoExistence => "not-co-existence",
            Template::NotSuccession => "not-succession",
            Template::RespondedExistence => "responded-existence",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Template::AtMost | Template::Existence => 1,
            _ => 2,
        }
    }

    /// Natural-language meaning over placeholders `a` and `b`.
    pub fn description(self) -> &'static str {
        match self {
            Template::AtMost => "a occurs at most once.",
            Template::Existence => "a occurs at least once.",
            Template::Response => "If a occurs, then b occurs after a.",
            Template::Precedence => "b occurs only if preceded by a.",
            Template::CoExistence => "a and b occur together.",
            Template::NotCoExistence => "a and b never occur together.",
            Template::NotSuccession => "b cannot occur after a.",
            Template::RespondedExistence => "If a occurs in the trace, then b occurs as well.",
        }
    }

    /// Accepts the canonical name, ignoring case and `_` for `-`.
    pub fn from_name(name: &str) -> Option<Template> {
        let norm = name.trim().to_ascii_lowercase().replace('_', "-");
        Template::ALL.into_iter().find(|t| t.name() == norm)
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RuleError {
    #[error("line {line}: unknown template `{name}`")]
    UnknownTemplate { line: usize, name: String },
    #[error("line {line}: `{template}` takes {expected} activity label(s), found {found}")]
    ArityMismatch {
        line: usize,
        template: Template,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: expected `template(activity)` or `template(activity, activity)`")]
    MalformedLine { line: usize },
    #[error("line {line}: a binary rule needs two distinct activities")]
    RepeatedLabel { line: usize },
    #[error("log has no traces")]
    EmptyLog,
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
}

/// One Declare constraint: a template applied to one or two activities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeclareRule {
    template: Template,
    args: Vec<String>,
}

impl DeclareRule {
    pub fn new(template: Template, args: Vec<String>) -> Result<Self, RuleError> {
        if args.len() != template.arity() {
            return Err(RuleError::ArityMismatch {
                line: 0,
                template,
                expected: template.arity(),
                found: args.len(),
            });
        }
        if args.len() == 2 && args[0] == args[1] {
            return Err(RuleError::RepeatedLabel { line: 0 });
        }
        Ok(Self { template, args })
    }

    pub fn unary(template: Template, a: impl Into<String>) -> Self {
        Self::new(template, vec![a.into()]).expect("unary template with one label")
    }

    pub fn binary(template: Template, a: impl Into<String>, b: impl Into<String>) -> Self {
        Self::new(template, vec![a.into(), b.into()]).expect("binary template with two distinct labels")
    }

    pub fn template(&self) -> Template {
        self.template
    }

    pub fn args(&self) -> &[String] {
        &self.args
    }

    pub fn first(&self) -> &str {
        &self.args[0]
    }

    pub fn second(&self) -> Option<&str> {
        self.args.get(1).map(String::as_str)
    }

    pub fn is_binary(&self) -> bool {
        self.args.len() == 2
    }

    pub fn mentions(&self, label: &str) -> bool {
        self.args.iter().any(|a| a == label)
    }

    /// Does the rule hold on the trace?
    pub fn check<S: AsRef<str>>(&self, trace: &[S]) -> bool {
        check_trace(self, trace)
    }

    /// Is the rule's activation condition met on the trace? Unary rules are
    /// always activated.
    pub fn is_activated<S: AsRef<str>>(&self, trace: &[S]) -> bool {
        let has = |l: &str| trace.iter().any(|x| x.as_ref() == l);
        match (self.template, self.second()) {
            (Template::AtMost | Template::Existence, _) => true,
            (Template::Precedence, Some(b)) => has(b),
            (Template::CoExistence | Template::NotCoExistence, Some(b)) => has(self.first()) || has(b),
            _ => has(self.first()),
        }
    }
}

impl fmt::Display for DeclareRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.template, self.args.join(", "))
    }
}

impl FromStr for DeclareRule {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rule_line(s, 1)
    }
}

impl Serialize for DeclareRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DeclareRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn check_trace<S: AsRef<str>>(rule: &DeclareRule, trace: &[S]) -> bool {
    let a = rule.first();
    let positions = |label: &str| {
        let mut first = None;
        let mut last = None;
        let mut count = 0usize;
        for (i, x) in trace.iter().enumerate() {
            if x.as_ref() == label {
                first.get_or_insert(i);
                last = Some(i);
                count += 1;
            }
        }
        (first, last, count)
    };
    let (first_a, last_a, count_a) = positions(a);
    let b = match rule.second() {
        None => {
            return match rule.template {
                Template::AtMost => count_a <= 1,
                _ => count_a >= 1,
            }
        }
        Some(b) => b,
    };
    let (first_b, last_b, count_b) = positions(b);
    let (has_a, has_b) = (count_a > 0, count_b > 0);
    match rule.template {
        Template::Response => match (last_a, last_b) {
            (None, _) => true,
            (Some(la), Some(lb)) => lb > la,
            (Some(_), None) => false,
        },
        Template::Precedence => match (first_a, first_b) {
            (_, None) => true,
            (Some(fa), Some(fb)) => fa < fb,
            (None, Some(_)) => false,
        },
        Template::CoExistence => has_a == has_b,
        Template::NotCoExistence => !(has_a && has_b),
        Template::NotSuccession => match (first_a, last_b) {
            (Some(fa), Some(lb)) => lb < fa,
            _ => true,
        },
        Template::RespondedExistence => !has_a || has_b,
        Template::AtMost | Template::Existence => unreachable!("unary handled above"),
    }
}

/// Weighted number of traces on which the rule holds.
pub fn satisfying_traces(rule: &DeclareRule, log: &EventLog) -> u64 {
    log.variants()
        .iter()
        .filter(|(t, _)| check_trace(rule, t))
        .map(|(_, c)| c)
        .sum()
}

/// Fraction of all traces that satisfy the rule; vacuously satisfied traces
/// count as satisfied.
pub fn confidence(rule: &DeclareRule, log: &EventLog) -> Result<f64, RuleError> {
    if log.total_traces() == 0 {
        return Err(RuleError::EmptyLog);
    }
    Ok(satisfying_traces(rule, log) as f64 / log.total_traces() as f64)
}

/// Fraction of the activated traces that satisfy the rule, or `None` when no
/// trace activates it.
pub fn activation_confidence(rule: &DeclareRule, log: &EventLog) -> Result<Option<f64>, RuleError> {
    if log.total_traces() == 0 {
        return Err(RuleError::EmptyLog);
    }
    let (mut active, mut holds) = (0u64, 0u64);
    for (trace, &count) in log.variants() {
        if rule.is_activated(trace) {
            active += count;
            if check_trace(rule, trace) {
                holds += count;
            }
        }
    }
    Ok((active > 0).then(|| holds as f64 / active as f64))
}

/// Every rule over the alphabet in template order, then label order.
pub fn candidate_rules(alphabet: &BTreeSet<String>) -> Vec<DeclareRule> {
    let mut out = Vec::new();
    for template in Template::ALL {
        if template.arity() == 1 {
            out.extend(alphabet.iter().map(|a| DeclareRule::unary(template, a.clone())));
        } else {
            for a in alphabet {
                for b in alphabet.iter().filter(|b| *b != a) {
                    out.push(DeclareRule::binary(template, a.clone(), b.clone()));
                }
            }
        }
    }
    out
}

/// All candidate rules whose confidence reaches `min_confidence`.
pub fn mine_rules(log: &EventLog, min_confidence: f64) -> Result<Vec<DeclareRule>, RuleError> {
    mine_rules_with(par::Exec::Parallel, log, min_confidence)
}

pub fn mine_rules_with(
    exec: par::Exec,
    log: &EventLog,
    min_confidence: f64,
) -> Result<Vec<DeclareRule>, RuleError> {
    if !(min_confidence > 0.0 && min_confidence <= 1.0) {
        return Err(RuleError::InvalidThreshold(min_confidence));
    }
    if log.total_traces() == 0 {
        return Err(RuleError::EmptyLog);
    }
    let total = log.total_traces();
    let candidates = candidate_rules(log.alphabet());
    let keep: Vec<bool> = par::map_with(exec, &candidates, |rule| {
        let sat = satisfying_traces(rule, log);
        sat == total || sat as f64 / total as f64 >= min_confidence
    });
    Ok(candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect())
}

fn parse_rule_line(raw: &str, line: usize) -> Result<DeclareRule, RuleError> {
    let text = raw.trim();
    let text = text.strip_suffix(',').unwrap_or(text).trim_end();
    let malformed = RuleError::MalformedLine { line };
    let open = text.find('(').ok_or(malformed.clone())?;
    let inner = text[open + 1..].strip_suffix(')').ok_or(malformed.clone())?;
    if inner.contains('(') || inner.contains(')') {
        return Err(malformed);
    }
    let name = text[..open].trim();
    if name.is_empty() {
        return Err(malformed);
    }
    let template = Template::from_name(name).ok_or_else(|| RuleError::UnknownTemplate {
        line,
        name: name.to_string(),
    })?;
    let args: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
    if args.iter().any(String::is_empty) {
        return Err(malformed);
    }
    DeclareRule::new(template, args).map_err(|e| match e {
        RuleError::ArityMismatch {
            template,
            expected,
            found,
            ..
        } => RuleError::ArityMismatch {
            line,
            template,
            expected,
            found,
        },
        _ => RuleError::RepeatedLabel { line },
    })
}

/// One non-comment line of a rule text and what it parsed to.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLine {
    pub line: usize,
    pub text: String,
    pub result: Result<DeclareRule, RuleError>,
}

fn is_skipped(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Parses every rule line, keeping failures instead of stopping at the first.
pub fn parse_rules_lenient(text: &str) -> Vec<ParsedLine> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !is_skipped(l))
        .map(|(i, l)| ParsedLine {
            line: i + 1,
            text: l.trim().to_string(),
            result: parse_rule_line(l, i + 1),
        })
        .collect()
}

pub fn parse_rules(text: &str) -> Result<Vec<DeclareRule>, RuleError> {
    parse_rules_lenient(text).into_iter().map(|p| p.result).collect()
}

pub fn format_rules(rules: &[DeclareRule]) -> String {
    rules.iter().map(|r| format!("{r}\n")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IssueKind {
    UnknownActivity,
    UnknownTemplate,
    ArityMismatch,
    MalformedLine,
    RepeatedLabel,
    DuplicateRule,
    ContradictoryPair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationItem {
    pub index: usize,
    pub severity: Severity,
    pub kind: IssueKind,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub items: Vec<ValidationItem>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn new(items: Vec<ValidationItem>) -> Self {
        let passed = items.iter().all(|i| i.severity != Severity::Error);
        Self { items, passed }
    }

    pub fn errors(&self) -> impl Iterator<Item = &ValidationItem> {
        self.items.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ValidationItem> {
        self.items.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        !self.passed
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.items.is_empty() {
            return writeln!(f, "validation passed");
        }
        for item in &self.items {
            let sev = match item.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            write!(f, "[{sev}] rule {}: {:?}: {}", item.index, item.kind, item.message)?;
            if let Some(s) = &item.suggestion {
                write!(f, " (did you mean `{s}`?)")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Closest alphabet label within edit distance 3; ties go to the smaller
/// label.
pub fn suggest_label(label: &str, alphabet: &BTreeSet<String>) -> Option<String> {
    alphabet
        .iter()
        .map(|a| (strsim::levenshtein(label, a), a))
        .filter(|(d, _)| *d <= 3)
        .min()
        .map(|(_, a)| a.clone())
}

fn unordered(rule: &DeclareRule) -> Option<(&str, &str)> {
    let b = rule.second()?;
    let a = rule.first();
    Some(if a <= b { (a, b) } else { (b, a) })
}

/// Checks labels against the alphabet and flags duplicates and directly
/// contradictory pairs.
pub fn validate_rules(rules: &[DeclareRule], alphabet: &BTreeSet<String>) -> ValidationReport {
    let mut items = Vec::new();
    check_rules_into(rules.iter().enumerate(), alphabet, &mut items);
    items.sort_by_key(|i| i.index);
    ValidationReport::new(items)
}

fn check_rules_into<'a>(
    rules: impl Iterator<Item = (usize, &'a DeclareRule)> + Clone,
    alphabet: &BTreeSet<String>,
    items: &mut Vec<ValidationItem>,
) {
    let mut seen: HashSet<&DeclareRule> = HashSet::new();
    for (index, rule) in rules.clone() {
        for label in rule.args() {
            if !alphabet.contains(label) {
                items.push(ValidationItem {
                    index,
                    severity: Severity::Error,
                    kind: IssueKind::UnknownActivity,
                    message: format!("`{rule}` uses activity `{label}`, which does not occur in the log"),
                    suggestion: suggest_label(label, alphabet),
                });
            }
        }
        if !seen.insert(rule) {
            items.push(ValidationItem {
                index,
                severity: Severity::Warning,
                kind: IssueKind::DuplicateRule,
                message: format!("`{rule}` is listed more than once"),
                suggestion: None,
            });
        }
    }

    let existing: HashSet<&str> = rules
        .clone()
        .filter(|(_, r)| r.template() == Template::Existence)
        .map(|(_, r)| r.first())
        .collect();
    let listed: Vec<(usize, &DeclareRule)> = rules.collect();
    for (pos, &(index, rule)) in listed.iter().enumerate() {
        let Some(pair) = unordered(rule) else { continue };
        if rule.template() == Template::NotCoExistence
            && existing.contains(pair.0)
            && existing.contains(pair.1)
        {
            items.push(ValidationItem {
                index,
                severity: Severity::Warning,
                kind: IssueKind::ContradictoryPair,
                message: format!("`{rule}` contradicts existence of both `{}` and `{}`", pair.0, pair.1),
                suggestion: None,
            });
        }
        let clash = |t: Template| {
            listed[..pos]
                .iter()
                .find(|(_, r)| r.template() == t && unordered(r) == Some(pair))
        };
        let opposite = match rule.template() {
            Template::CoExistence => Template::NotCoExistence,
            Template::NotCoExistence => Template::CoExistence,
            _ => continue,
        };
        if let Some((_, other)) = clash(opposite) {
            items.push(ValidationItem {
                index,
                severity: Severity::Warning,
                kind: IssueKind::ContradictoryPair,
                message: format!("`{rule}` contradicts `{other}`"),
                suggestion: None,
            });
        }
    }
}

/// Parses a rule text and validates it in one pass: syntax problems and
/// alphabet problems land in the same report, indexed by rule line (0-based
/// among non-comment lines). Returns the rules that parsed.
pub fn validate_text(text: &str, alphabet: &BTreeSet<String>) -> (Vec<DeclareRule>, ValidationReport) {
    let parsed = parse_rules_lenient(text);
    let mut items = Vec::new();
    let mut good: Vec<(usize, DeclareRule)> = Vec::new();
    for (index, p) in parsed.iter().enumerate() {
        match &p.result {
            Ok(rule) => good.push((index, rule.clone())),
            Err(e) => {
                let kind = match e {
                    RuleError::UnknownTemplate { .. } => IssueKind::UnknownTemplate,
                    RuleError::ArityMismatch { .. } => IssueKind::ArityMismatch,
                    RuleError::RepeatedLabel { .. } => IssueKind::RepeatedLabel,
                    _ => IssueKind::MalformedLine,
                };
                let suggestion = match e {
                    RuleError::UnknownTemplate { name, .. } => Template::ALL
                        .iter()
                        .map(|t| (strsim::levenshtein(name, t.name()), t.name()))
                        .filter(|(d, _)| *d <= 3)
                        .min()
                        .map(|(_, n)| n.to_string()),
                    _ => None,
                };
                items.push(ValidationItem {
                    index,
                    severity: Severity::Error,
                    kind,
                    message: format!("`{}`: {e}", p.text),
                    suggestion,
                });
            }
        }
    }
    check_rules_into(good.iter().map(|(i, r)| (*i, r)), alphabet, &mut items);
    items.sort_by_key(|i| i.index);
    (
        good.into_iter().map(|(_, r)| r).collect(),
        ValidationReport::new(items),
    )
}
