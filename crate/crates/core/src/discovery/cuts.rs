use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::DiscoveryError;
use crate::log::Dfg;

/// Operators of a binary cut, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operator {
    #[serde(rename = "seq")]
    Sequence,
    #[serde(rename = "xor")]
    Xor,
    #[serde(rename = "par")]
    Parallel,
    #[serde(rename = "loop")]
    Loop,
}

impl Operator {
    pub const ALL: [Operator; 4] = [
        Operator::Sequence,
        Operator::Xor,
        Operator::Parallel,
        Operator::Loop,
    ];

    pub fn glyph(self) -> &'static str {
        match self {
            Operator::Sequence => "seq",
            Operator::Xor => "xor",
            Operator::Parallel => "par",
            Operator::Loop => "loop",
        }
    }

    pub fn from_glyph(s: &str) -> Option<Operator> {
        Operator::ALL.into_iter().find(|o| o.glyph() == s)
    }

    /// Sequence and loop sides are ordered; choice and parallel are not.
    pub fn is_symmetric(self) -> bool {
        matches!(self, Operator::Xor | Operator::Parallel)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.glyph())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// A bipartition of the current alphabet together with an operator.
///
/// For sequence the first side precedes the second; for loop the first side
/// is the body and the second the redo part. Symmetric cuts are stored with
/// the smaller side first (ties: lexicographically smaller label list), so
/// each has one representation. The derived order is the selection
/// tie-break: operator, then first side as a sorted label list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cut {
    operator: Operator,
    sigma1: BTreeSet<String>,
    sigma2: BTreeSet<String>,
}

impl Cut {
    pub fn new(
        operator: Operator,
        sigma1: BTreeSet<String>,
        sigma2: BTreeSet<String>,
    ) -> Result<Cut, DiscoveryError> {
        if sigma1.is_empty() || sigma2.is_empty() || !sigma1.is_disjoint(&sigma2) {
            return Err(DiscoveryError::InvalidPartition);
        }
        let swap = operator.is_symmetric()
            && (sigma2.len(), &sigma2) < (sigma1.len(), &sigma1);
        Ok(if swap {
            Cut { operator, sigma1: sigma2, sigma2: sigma1 }
        } else {
            Cut { operator, sigma1, sigma2 }
        })
    }

    pub fn operator(&self) -> Operator {
        self.operator
    }

    pub fn sigma1(&self) -> &BTreeSet<String> {
        &self.sigma1
    }

    pub fn sigma2(&self) -> &BTreeSet<String> {
        &self.sigma2
    }

    pub fn side_of(&self, label: &str) -> Option<Side> {
        if self.sigma1.contains(label) {
            Some(Side::First)
        } else if self.sigma2.contains(label) {
            Some(Side::Second)
        } else {
            None
        }
    }

    /// Does the cut split exactly this alphabet?
    pub fn covers(&self, alphabet: &BTreeSet<String>) -> bool {
        self.sigma1.len() + self.sigma2.len() == alphabet.len()
            && alphabet.iter().all(|a| self.side_of(a).is_some())
    }
}

impl fmt::Display for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
        write!(f, "{}({{{}}}, {{{}}})", self.operator, side(&self.sigma1), side(&self.sigma2))
    }
}

/// Alphabets up to this size get every bipartition as a candidate.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Candidate cuts over the DFG's alphabet, sorted by the tie-break order.
pub fn enumerate_cuts(dfg: &Dfg) -> Result<Vec<Cut>, DiscoveryError> {
    enumerate_cuts_limited(dfg, EXHAUSTIVE_LIMIT)
}

pub fn enumerate_cuts_limited(dfg: &Dfg, exhaustive_limit: usize) -> Result<Vec<Cut>, DiscoveryError> {
    let n = dfg.len();
    if n < 2 {
        return Err(DiscoveryError::AlphabetTooSmall);
    }
    let masks: BTreeSet<Vec<bool>> = if n <= exhaustive_limit {
        (1u64..(1u64 << n) - 1)
            .map(|m| (0..n).map(|i| m >> i & 1 == 1).collect())
            .collect()
    } else {
        guided_partitions(dfg)
    };
    let acts = dfg.activities();
    let mut cuts = BTreeSet::new();
    for mask in &masks {
        let (s1, s2): (Vec<_>, Vec<_>) = (0..n).partition(|&i| mask[i]);
        let s1: BTreeSet<String> = s1.into_iter().map(|i| acts[i].clone()).collect();
        let s2: BTreeSet<String> = s2.into_iter().map(|i| acts[i].clone()).collect();
        for op in Operator::ALL {
            cuts.insert(Cut::new(op, s1.clone(), s2.clone())?);
        }
    }
    Ok(cuts.into_iter().collect())
}

/// Bipartitions suggested by the graph structure, for alphabets too large to
/// enumerate. Each mask marks the first side; complements are added too.
fn guided_partitions(dfg: &Dfg) -> BTreeSet<Vec<bool>> {
    let n = dfg.len();
    let mut out: BTreeSet<Vec<bool>> = BTreeSet::new();
    let mut add = |mask: Vec<bool>| {
        let k = mask.iter().filter(|&&b| b).count();
        if k > 0 && k < n {
            out.insert(mask.iter().map(|b| !b).collect());
            out.insert(mask);
        }
    };

    for i in 0..n {
        add((0..n).map(|j| j == i).collect());
    }

    let mut freqs: Vec<u64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| dfg.edge_at(i, j))
        .filter(|&f| f > 0)
        .collect();
    freqs.sort_unstable();
    let mut thresholds: Vec<u64> = vec![1];
    for q in [1, 2, 3] {
        if let Some(&f) = freqs.get(freqs.len() * q / 4) {
            thresholds.push(f);
        }
    }
    thresholds.dedup();

    for &t in &thresholds {
        let has = |i: usize, j: usize| dfg.edge_at(i, j) >= t;

        // Choice: weakly connected components.
        for comp in components(n, |i, j| has(i, j) || has(j, i)) {
            add(mask_of(n, &comp));
        }

        // Sequence: prefixes of a topological order of the SCC condensation.
        let sccs = strongly_connected(n, &has);
        let order = condensation_order(&sccs, n, &has);
        let mut prefix = vec![false; n];
        for comp in order.iter().take(order.len().saturating_sub(1)) {
            for &i in comp {
                prefix[i] = true;
            }
            add(prefix.clone());
        }
        for comp in &sccs {
            add(mask_of(n, comp));
        }

        // Parallel: components of the "not in both directions" relation.
        for comp in components(n, |i, j| !(has(i, j) && has(j, i))) {
            add(mask_of(n, &comp));
        }

        // Loop: components among activities that neither start nor end.
        let inner: Vec<bool> = (0..n).map(|i| dfg.start_at(i) == 0 && dfg.end_at(i) == 0).collect();
        for comp in components(n, |i, j| inner[i] && inner[j] && (has(i, j) || has(j, i))) {
            if comp.iter().all(|&i| inner[i]) {
                add(mask_of(n, &comp));
            }
        }
    }
    out
}

fn mask_of(n: usize, members: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in members {
        m[i] = true;
    }
    m
}

fn components(n: usize, linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut comp_of = vec![usize::MAX; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if comp_of[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        comp_of[start] = id;
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in 0..n {
                if comp_of[j] == usize::MAX && j != i && linked(i, j) {
                    comp_of[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps
}

/// Kosaraju over the thresholded DFG.
fn strongly_connected(n: usize, has: &impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    fn finish(i: usize, n: usize, has: &impl Fn(usize, usize) -> bool, seen: &mut [bool], order: &mut Vec<usize>) {
        seen[i] = true;
        for j in 0..n {
            if !seen[j] && has(i, j) {
                finish(j, n, has, seen, order);
            }
        }
        order.push(i);
    }
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for i in 0..n {
        if !seen[i] {
            finish(i, n, has, &mut seen, &mut order);
        }
    }
    let mut assigned = vec![false; n];
    let mut sccs = Vec::new();
    for &root in order.iter().rev() {
        if assigned[root] {
            continue;
        }
        let mut stack = vec![root];
        let mut comp = Vec::new();
        assigned[root] = true;
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in 0..n {
                if !assigned[j] && has(j, i) {
                    assigned[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        sccs.push(comp);
    }
    sccs
}

/// SCCs in a topological order of the condensation (Kahn, smallest index
/// first among ready components).
fn condensation_order(
    sccs: &[Vec<usize>],
    n: usize,
    has: &impl Fn(usize, usize) -> bool,
) -> Vec<Vec<usize>> {
    let mut comp_of = vec![0usize; n];
    for (c, members) in sccs.iter().enumerate() {
        for &i in members {
            comp_of[i] = c;
        }
    }
    let k = sccs.len();
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for i in 0..n {
        for j in 0..n {
            if has(i, j) && comp_of[i] != comp_of[j] {
                succ[comp_of[i]].insert(comp_of[j]);
            }
        }
    }
    let mut indeg = vec![0usize; k];
    for s in &succ {
        for &t in s {
            indeg[t] += 1;
        }
    }
    let mut ready: BTreeSet<(usize, usize)> =
        (0..k).filter(|&c| indeg[c] == 0).map(|c| (sccs[c][0], c)).collect();
    let mut out = Vec::with_capacity(k);
    while let Some((_, c)) = ready.pop_first() {
        out.push(sccs[c].clone());
        for &t in &succ[c] {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                ready.insert((sccs[t][0], t));
            }
        }
    }
    out
}
