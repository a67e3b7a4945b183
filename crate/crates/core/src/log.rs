//! Event logs as weighted variants, directly-follows graphs, and the
//! projections and splits used by the discovery recursion.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use thiserror::Error;

use crate::discovery::{Cut, Operator};

/// A trace is the ordered list of activity labels of one case.
pub type Trace = Vec<String>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LogError {
    #[error("input is empty")]
    EmptyInput,
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("row {row}: cannot parse timestamp `{value}`")]
    UnparseableTimestamp { row: u64, value: String },
    #[error("line {line}: bad variant count")]
    BadCount { line: usize },
    #[error("line {line}: empty or malformed activity label")]
    BadLabel { line: usize },
    #[error("line {line}: duplicate variant")]
    DuplicateVariant { line: usize },
    #[error("cut does not partition the log alphabet")]
    InvalidPartition,
    #[error("csv: {0}")]
    Csv(String),
}

/// Multiset of traces over an activity alphabet.
///
/// Variants are kept in a `BTreeMap` so every iteration over a log is
/// deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    variants: BTreeMap<Trace, u64>,
    alphabet: BTreeSet<String>,
    total_traces: u64,
}

impl EventLog {
    /// Builds a log from `(trace, count)` pairs. Identical traces are merged
    /// and zero counts are skipped.
    pub fn from_counts<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Trace, u64)>,
    {
        let mut variants: BTreeMap<Trace, u64> = BTreeMap::new();
        for (trace, count) in pairs {
            if count == 0 {
                continue;
            }
            *variants.entry(trace).or_insert(0) += count;
        }
        Self::from_map(variants)
    }

    fn from_map(variants: BTreeMap<Trace, u64>) -> Self {
        let alphabet = variants.keys().flatten().cloned().collect();
        let total_traces = variants.values().sum();
        Self {
            variants,
            alphabet,
            total_traces,
        }
    }

    pub fn variants(&self) -> &BTreeMap<Trace, u64> {
        &self.variants
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn total_traces(&self) -> u64 {
        self.total_traces
    }

    pub fn num_variants(&self) -> usize {
        self.variants.len()
    }

    pub fn total_events(&self) -> u64 {
        self.variants
            .iter()
            .map(|(t, c)| t.len() as u64 * c)
            .sum()
    }

    pub fn empty_traces(&self) -> u64 {
        self.variants.get(&Vec::new()).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.total_traces == 0
    }

    /// The same log with the empty-trace variant removed.
    pub fn without_empty_traces(&self) -> EventLog {
        let mut variants = self.variants.clone();
        variants.remove(&Vec::new());
        Self::from_map(variants)
    }
}

/// Column names used when reading a CSV event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvConfig {
    pub case_column: String,
    pub activity_column: String,
    pub timestamp_column: String,
}

impl Default for CsvConfig {
    fn default() -> Self {
        Self {
            case_column: "case_id".into(),
            activity_column: "activity".into(),
            timestamp_column: "timestamp".into(),
        }
    }
}

fn parse_timestamp(value: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(value) {
        return Some(dt.naive_utc());
    }
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    for fmt in FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(value, fmt) {
            return Some(dt);
        }
    }
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Reads a CSV event log. Events of a case are ordered by timestamp; ties
/// keep file order.
pub fn parse_csv_log(text: &str, config: &CsvConfig) -> Result<EventLog, LogError> {
    if text.trim().is_empty() {
        return Err(LogError::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| LogError::Csv(e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LogError::MissingColumn(name.to_string()))
    };
    let case_idx = column(&config.case_column)?;
    let act_idx = column(&config.activity_column)?;
    let ts_idx = column(&config.timestamp_column)?;

    let mut cases: HashMap<String, Vec<(NaiveDateTime, usize, String)>> = HashMap::new();
    let mut rows = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| LogError::Csv(e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");
        let raw_ts = field(ts_idx);
        let ts = parse_timestamp(raw_ts).ok_or_else(|| LogError::UnparseableTimestamp {
            row: line,
            value: raw_ts.to_string(),
        })?;
        cases
            .entry(field(case_idx).to_string())
            .or_default()
            .push((ts, row_idx, field(act_idx).to_string()));
        rows += 1;
    }
    if rows == 0 {
        return Err(LogError::EmptyInput);
    }
    Ok(EventLog::from_counts(cases.into_values().map(|mut events| {
        events.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        (events.into_iter().map(|e| e.2).collect(), 1)
    })))
}

/// Reads the `<count>;<act1>,<act2>,...` variants format.
pub fn parse_variants(text: &str) -> Result<EventLog, LogError> {
    let mut variants: BTreeMap<Trace, u64> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let (count, labels) = content
            .split_once(';')
            .ok_or(LogError::BadCount { line })?;
        let count: u64 = count
            .trim()
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or(LogError::BadCount { line })?;
        let labels = labels.trim();
        let trace: Trace = if labels.is_empty() {
            Vec::new()
        } else {
            labels
                .split(',')
                .map(|l| {
                    let l = l.trim();
                    if l.is_empty() || l.contains(';') {
                        Err(LogError::BadLabel { line })
                    } else {
                        Ok(l.to_string())
                    }
                })
                .collect::<Result<_, _>>()?
        };
        if variants.insert(trace, count).is_some() {
            return Err(LogError::DuplicateVariant { line });
        }
    }
    Ok(EventLog::from_map(variants))
}

/// Writes a log in the variants format accepted by [`parse_variants`].
pub fn format_variants(log: &EventLog) -> String {
    let mut out = String::new();
    for (trace, count) in log.variants() {
        let _ = writeln!(out, "{count};{}", trace.join(","));
    }
    out
}

/// Directly-follows graph with artificial start and end.
///
/// Activities are indexed in sorted order; edge frequencies are stored in a
/// dense matrix because cut scoring reads them many times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfg {
    activities: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<u64>,
    start: Vec<u64>,
    end: Vec<u64>,
    empty_traces: u64,
    total_traces: u64,
}

impl Dfg {
    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn edge_at(&self, from: usize, to: usize) -> u64 {
        self.edges[from * self.activities.len() + to]
    }

    pub fn start_at(&self, i: usize) -> u64 {
        self.start[i]
    }

    pub fn end_at(&self, i: usize) -> u64 {
        self.end[i]
    }

    /// f(x, y); zero for unknown labels.
    pub fn edge(&self, from: &str, to: &str) -> u64 {
        match (self.index_of(from), self.index_of(to)) {
            (Some(i), Some(j)) => self.edge_at(i, j),
            _ => 0,
        }
    }

    pub fn start_freq(&self, label: &str) -> u64 {
        self.index_of(label).map_or(0, |i| self.start[i])
    }

    pub fn end_freq(&self, label: &str) -> u64 {
        self.index_of(label).map_or(0, |i| self.end[i])
    }

    pub fn empty_traces(&self) -> u64 {
        self.empty_traces
    }

    pub fn total_traces(&self) -> u64 {
        self.total_traces
    }

    /// Positive edges in (from, to) label order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> + '_ {
        let n = self.activities.len();
        (0..n * n).filter_map(move |k| {
            let f = self.edges[k];
            (f > 0).then(|| (self.activities[k / n].as_str(), self.activities[k % n].as_str(), f))
        })
    }

    /// Ceiling of the mean positive edge frequency; zero without edges.
    pub fn mean_edge_ceil(&self) -> u64 {
        let (sum, count) = self
            .edges
            .iter()
            .filter(|&&f| f > 0)
            .fold((0u64, 0u64), |(s, c), &f| (s + f, c + 1));
        if count == 0 {
            0
        } else {
            sum.div_ceil(count)
        }
    }
}

pub fn build_dfg(log: &EventLog) -> Dfg {
    let activities: Vec<String> = log.alphabet().iter().cloned().collect();
    let index: HashMap<String, usize> = activities
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    let n = activities.len();
    let mut edges = vec![0u64; n * n];
    let mut start = vec![0u64; n];
    let mut end = vec![0u64; n];
    let mut empty_traces = 0;
    for (trace, &count) in log.variants() {
        let ids: Vec<usize> = trace.iter().map(|a| index[a]).collect();
        match (ids.first(), ids.last()) {
            (Some(&s), Some(&e)) => {
                start[s] += count;
                end[e] += count;
            }
            _ => empty_traces += count,
        }
        for w in ids.windows(2) {
            edges[w[0] * n + w[1]] += count;
        }
    }
    Dfg {
        activities,
        index,
        edges,
        start,
        end,
        empty_traces,
        total_traces: log.total_traces(),
    }
}

/// Filters every trace to the labels in `keep`, merging identical results.
pub fn project_log(log: &EventLog, keep: &BTreeSet<String>) -> EventLog {
    EventLog::from_counts(log.variants().iter().map(|(trace, &count)| {
        (
            trace.iter().filter(|a| keep.contains(*a)).cloned().collect(),
            count,
        )
    }))
}

fn project_trace(trace: &[String], keep: &BTreeSet<String>) -> Trace {
    trace.iter().filter(|a| keep.contains(*a)).cloned().collect()
}

/// Splits a log along a cut into the sub-logs over its two sides.
pub fn split_log(log: &EventLog, cut: &Cut) -> Result<(EventLog, EventLog), LogError> {
    let (s1, s2) = (cut.sigma1(), cut.sigma2());
    if s1.is_empty()
        || s2.is_empty()
        || !s1.is_disjoint(s2)
        || s1.len() + s2.len() != log.alphabet().len()
        || !log.alphabet().iter().all(|a| s1.contains(a) || s2.contains(a))
    {
        return Err(LogError::InvalidPartition);
    }
    let mut left: Vec<(Trace, u64)> = Vec::new();
    let mut right: Vec<(Trace, u64)> = Vec::new();
    for (trace, &count) in log.variants() {
        match cut.operator() {
            Operator::Xor => {
                let n1 = trace.iter().filter(|a| s1.contains(*a)).count();
                if trace.len() - n1 > n1 {
                    right.push((project_trace(trace, s2), count));
                } else {
                    left.push((project_trace(trace, s1), count));
                }
            }
            Operator::Sequence => {
                let at = sequence_split_index(trace, s1);
                left.push((project_trace(&trace[..at], s1), count));
                right.push((project_trace(&trace[at..], s2), count));
            }
            Operator::Parallel => {
                left.push((project_trace(trace, s1), count));
                right.push((project_trace(trace, s2), count));
            }
            Operator::Loop => {
                let (body, redo) = loop_segments(trace, s1);
                left.extend(body.into_iter().map(|t| (t, count)));
                right.extend(redo.into_iter().map(|t| (t, count)));
            }
        }
    }
    Ok((EventLog::from_counts(left), EventLog::from_counts(right)))
}

/// Index minimising Σ2-events before it plus Σ1-events at or after it;
/// the smallest such index wins.
fn sequence_split_index(trace: &[String], sigma1: &BTreeSet<String>) -> usize {
    let in_first: Vec<bool> = trace.iter().map(|a| sigma1.contains(a)).collect();
    let mut misplaced = in_first.iter().filter(|&&f| f).count();
    let (mut best, mut best_at) = (misplaced, 0);
    for (i, &f) in in_first.iter().enumerate() {
        if f {
            misplaced -= 1;
        } else {
            misplaced += 1;
        }
        if misplaced < best {
            best = misplaced;
            best_at = i + 1;
        }
    }
    best_at
}

/// Maximal single-side segments of a trace. A trace that starts or ends in
/// the redo part contributes an empty body trace at that end.
fn loop_segments(trace: &[String], body: &BTreeSet<String>) -> (Vec<Trace>, Vec<Trace>) {
    let mut bodies = Vec::new();
    let mut redos = Vec::new();
    let mut current: Trace = Vec::new();
    let mut side: Option<bool> = None;
    for a in trace {
        let in_body = body.contains(a);
        if side != Some(in_body) {
            match side {
                Some(true) => bodies.push(std::mem::take(&mut current)),
                Some(false) => redos.push(std::mem::take(&mut current)),
                None if !in_body => bodies.push(Vec::new()),
                None => {}
            }
            side = Some(in_body);
        }
        current.push(a.clone());
    }
    match side {
        Some(true) => bodies.push(current),
        Some(false) => {
            redos.push(current);
            bodies.push(Vec::new());
        }
        None => bodies.push(Vec::new()),
    }
    (bodies, redos)
}
