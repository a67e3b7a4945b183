use std::collections::{BTreeSet, HashMap};

use super::ModelError;
use crate::declare::{check_trace, DeclareRule};
use crate::discovery::Operator;
use crate::log::Trace;
use crate::tree::ProcessTree;

/// Default cap on the number of traces an enumeration may hold.
pub const DEFAULT_LANGUAGE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedLanguage {
    pub traces: BTreeSet<Trace>,
    pub loop_bound: usize,
    pub max_len: usize,
    /// The tree is loop-free and no trace was cut off by `max_len`.
    pub exact: bool,
}

impl BoundedLanguage {
    /// Traces sorted by length, then lexicographically.
    pub fn length_lex(&self) -> Vec<&Trace> {
        let mut v: Vec<&Trace> = self.traces.iter().collect();
        v.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated(Trace),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// Exact membership test. Loops are handled by a fixpoint over trace
/// positions, so no unrolling bound applies.
pub fn accepts(tree: &ProcessTree, trace: &[String]) -> bool {
    let labels = tree.alphabet();
    if trace.iter().any(|a| !labels.contains(a)) {
        return false;
    }
    Matcher::default().run(tree, trace)
}

#[derive(Default)]
struct Matcher {
    memo: HashMap<(*const ProcessTree, Vec<String>), bool>,
}

impl Matcher {
    fn run(&mut self, node: &ProcessTree, t: &[String]) -> bool {
        let key = (node as *const ProcessTree, t.to_vec());
        if let Some(&hit) = self.memo.get(&key) {
            return hit;
        }
        let result = match node {
            ProcessTree::Activity(a) => t.len() == 1 && t[0] == *a,
            ProcessTree::Silent => t.is_empty(),
            ProcessTree::Operator(Operator::Xor, children) => children.iter().any(|c| self.run(c, t)),
            ProcessTree::Operator(Operator::Sequence, children) => self.sequence(children, t),
            ProcessTree::Operator(Operator::Loop, children) => self.looped(&children[0], &children[1], t),
            ProcessTree::Operator(Operator::Parallel, children) => self.parallel(children, t),
        };
        self.memo.insert(key, result);
        result
    }

    fn sequence(&mut self, children: &[ProcessTree], t: &[String]) -> bool {
        let mut reach = vec![false; t.len() + 1];
        reach[0] = true;
        for child in children {
            let mut next = vec![false; t.len() + 1];
            for s in (0..=t.len()).filter(|&s| reach[s]) {
                for e in s..=t.len() {
                    if !next[e] && self.run(child, &t[s..e]) {
                        next[e] = true;
                    }
                }
            }
            reach = next;
        }
        reach[t.len()]
    }

    fn looped(&mut self, body: &ProcessTree, redo: &ProcessTree, t: &[String]) -> bool {
        let n = t.len();
        // after_body[i]: t[..i] is body (redo body)*
        let mut after_body = vec![false; n + 1];
        let mut after_redo = vec![false; n + 1];
        let mut body_starts = vec![0usize];
        let mut redo_starts = Vec::new();
        while !body_starts.is_empty() || !redo_starts.is_empty() {
            for s in std::mem::take(&mut body_starts) {
                for e in s..=n {
                    if !after_body[e] && self.run(body, &t[s..e]) {
                        after_body[e] = true;
                        redo_starts.push(e);
                    }
                }
            }
            for s in std::mem::take(&mut redo_starts) {
                for e in s..=n {
                    if !after_redo[e] && self.run(redo, &t[s..e]) {
                        after_redo[e] = true;
                        body_starts.push(e);
                    }
                }
            }
        }
        after_body[n]
    }

    fn parallel(&mut self, children: &[ProcessTree], t: &[String]) -> bool {
        let alphabets: Vec<BTreeSet<String>> = children.iter().map(ProcessTree::alphabet).collect();
        let owners: Vec<Vec<usize>> = t
            .iter()
            .map(|a| (0..children.len()).filter(|&k| alphabets[k].contains(a)).collect())
            .collect();
        if owners.iter().any(Vec::is_empty) {
            return false;
        }
        let ambiguous: Vec<usize> = (0..t.len()).filter(|&i| owners[i].len() > 1).collect();
        let mut choice = vec![0usize; ambiguous.len()];
        loop {
            let mut parts = vec![Vec::new(); children.len()];
            let mut amb = 0;
            for (i, a) in t.iter().enumerate() {
                let k = if owners[i].len() == 1 {
                    owners[i][0]
                } else {
                    amb += 1;
                    owners[i][choice[amb - 1]]
                };
                parts[k].push(a.clone());
            }
            if children.iter().zip(&parts).all(|(c, p)| self.run(c, p)) {
                return true;
            }
            // Next assignment of the ambiguous events, odometer style.
            let mut k = 0;
            loop {
                if k == choice.len() {
                    return false;
                }
                choice[k] += 1;
                if choice[k] < owners[ambiguous[k]].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }
}

pub fn enumerate_language(
    tree: &ProcessTree,
    loop_bound: usize,
    max_len: usize,
) -> Result<BoundedLanguage, ModelError> {
    enumerate_language_capped(tree, loop_bound, max_len, DEFAULT_LANGUAGE_CAP)
}

pub fn enumerate_language_capped(
    tree: &ProcessTree,
    loop_bound: usize,
    max_len: usize,
    cap: usize,
) -> Result<BoundedLanguage, ModelError> {
    let mut e = Enumerator { loop_bound, max_len, cap, truncated: false };
    let traces = e.run(tree)?;
    Ok(BoundedLanguage {
        traces,
        loop_bound,
        max_len,
        exact: tree.is_loop_free() && !e.truncated,
    })
}

struct Enumerator {
    loop_bound: usize,
    max_len: usize,
    cap: usize,
    truncated: bool,
}

type Lang = BTreeSet<Trace>;

impl Enumerator {
    fn guard(&self, lang: &Lang) -> Result<(), ModelError> {
        if lang.len() > self.cap {
            Err(ModelError::ExplosionGuard(self.cap))
        } else {
            Ok(())
        }
    }

    fn run(&mut self, node: &ProcessTree) -> Result<Lang, ModelError> {
        let lang = match node {
            ProcessTree::Activity(a) => {
                if self.max_len == 0 {
                    self.truncated = true;
                    Lang::new()
                } else {
                    Lang::from([vec![a.clone()]])
                }
            }
            ProcessTree::Silent => Lang::from([Vec::new()]),
            ProcessTree::Operator(Operator::Xor, children) => {
                let mut out = Lang::new();
                for c in children {
                    out.extend(self.run(c)?);
                    self.guard(&out)?;
                }
                out
            }
            ProcessTree::Operator(Operator::Sequence, children) => {
                let mut out = Lang::from([Vec::new()]);
                for c in children {
                    let next = self.run(c)?;
                    out = self.concat(&out, &next)?;
                }
                out
            }
            ProcessTree::Operator(Operator::Parallel, children) => {
                let mut out = Lang::from([Vec::new()]);
                for c in children {
                    let next = self.run(c)?;
                    out = self.shuffle(&out, &next)?;
                }
                out
            }
            ProcessTree::Operator(Operator::Loop, children) => {
                let body = self.run(&children[0])?;
                let redo = self.run(&children[1])?;
                let mut out = body.clone();
                let mut frontier = body.clone();
                for _ in 0..self.loop_bound {
                    let with_redo = self.concat(&frontier, &redo)?;
                    frontier = self.concat(&with_redo, &body)?;
                    out.extend(frontier.iter().cloned());
                    self.guard(&out)?;
                }
                out
            }
        };
        self.guard(&lang)?;
        Ok(lang)
    }

    fn concat(&mut self, left: &Lang, right: &Lang) -> Result<Lang, ModelError> {
        let mut out = Lang::new();
        for l in left {
            for r in right {
                if l.len() + r.len() > self.max_len {
                    self.truncated = true;
                    continue;
                }
                let mut t = l.clone();
                t.extend(r.iter().cloned());
                out.insert(t);
            }
            self.guard(&out)?;
        }
        Ok(out)
    }

    fn shuffle(&mut self, left: &Lang, right: &Lang) -> Result<Lang, ModelError> {
        let mut out = Lang::new();
        for l in left {
            for r in right {
                if l.len() + r.len() > self.max_len {
                    self.truncated = true;
                    continue;
                }
                interleave(l, r, &mut Vec::new(), &mut out);
            }
            self.guard(&out)?;
        }
        Ok(out)
    }
}

fn interleave(l: &[String], r: &[String], prefix: &mut Vec<String>, out: &mut Lang) {
    match (l.split_first(), r.split_first()) {
        (None, _) | (_, None) => {
            let mut t = prefix.clone();
            t.extend_from_slice(l);
            t.extend_from_slice(r);
            out.insert(t);
        }
        (Some((x, l_rest)), Some((y, r_rest))) => {
            prefix.push(x.clone());
            interleave(l_rest, r, prefix, out);
            prefix.pop();
            prefix.push(y.clone());
            interleave(l, r_rest, prefix, out);
            prefix.pop();
        }
    }
}

/// Checks the rule on every trace of the bounded language; the witness is the
/// first violating trace in length-lexicographic order.
pub fn model_satisfies(
    rule: &DeclareRule,
    tree: &ProcessTree,
    loop_bound: usize,
    max_len: usize,
) -> Result<Verdict, ModelError> {
    let lang = enumerate_language(tree, loop_bound, max_len)?;
    Ok(verdict_on(rule, &lang))
}

/// Same check against an already enumerated language.
pub fn verdict_on(rule: &DeclareRule, lang: &BoundedLanguage) -> Verdict {
    lang.length_lex()
        .into_iter()
        .find(|t| !check_trace(rule, t))
        .map_or(Verdict::Holds, |t| Verdict::Violated(t.clone()))
}
