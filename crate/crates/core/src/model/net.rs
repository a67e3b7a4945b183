use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::discovery::Operator;
use crate::tree::ProcessTree;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    /// `None` for silent transitions.
    pub label: Option<String>,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

/// Petri net with one source and one sink place. Places are numbered
/// `0..places`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowNet {
    pub places: usize,
    pub transitions: Vec<Transition>,
    pub source: usize,
    pub sink: usize,
}

pub fn to_workflow_net(tree: &ProcessTree) -> WorkflowNet {
    let mut net = WorkflowNet {
        places: 2,
        transitions: Vec::new(),
        source: 0,
        sink: 1,
    };
    net.translate(tree, 0, 1);
    net
}

impl WorkflowNet {
    fn place(&mut self) -> usize {
        self.places += 1;
        self.places - 1
    }

    fn transition(&mut self, label: Option<String>, inputs: Vec<usize>, outputs: Vec<usize>) {
        self.transitions.push(Transition { label, inputs, outputs });
    }

    fn translate(&mut self, node: &ProcessTree, entry: usize, exit: usize) {
        match node {
            ProcessTree::Activity(a) => self.transition(Some(a.clone()), vec![entry], vec![exit]),
            ProcessTree::Silent => self.transition(None, vec![entry], vec![exit]),
            ProcessTree::Operator(Operator::Sequence, children) => {
                let mut from = entry;
                for (i, c) in children.iter().enumerate() {
                    let to = if i + 1 == children.len() { exit } else { self.place() };
                    self.translate(c, from, to);
                    from = to;
                }
            }
            ProcessTree::Operator(Operator::Xor, children) => {
                for c in children {
                    self.translate(c, entry, exit);
                }
            }
            ProcessTree::Operator(Operator::Parallel, children) => {
                let mut starts = Vec::new();
                let mut ends = Vec::new();
                for c in children {
                    let (s, e) = (self.place(), self.place());
                    self.translate(c, s, e);
                    starts.push(s);
                    ends.push(e);
                }
                self.transition(None, vec![entry], starts);
                self.transition(None, ends, vec![exit]);
            }
            ProcessTree::Operator(Operator::Loop, children) => {
                let (s, e) = (self.place(), self.place());
                self.transition(None, vec![entry], vec![s]);
                self.translate(&children[0], s, e);
                self.translate(&children[1], e, s);
                self.transition(None, vec![e], vec![exit]);
            }
        }
    }

    /// Arcs as (from, to) node names: places are `p<i>`, transitions `t<j>`.
    pub fn arcs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (j, t) in self.transitions.iter().enumerate() {
            out.extend(t.inputs.iter().map(|p| (format!("p{p}"), format!("t{j}"))));
            out.extend(t.outputs.iter().map(|p| (format!("t{j}"), format!("p{p}"))));
        }
        out
    }

    pub fn labels(&self) -> BTreeSet<&str> {
        self.transitions.iter().filter_map(|t| t.label.as_deref()).collect()
    }

    /// Token game from one token on the source to one token on the sink,
    /// firing silent transitions freely.
    pub fn replay(&self, trace: &[String]) -> bool {
        let mut start = vec![0u32; self.places];
        start[self.source] = 1;
        let mut goal = vec![0u32; self.places];
        goal[self.sink] = 1;

        let mut seen: HashSet<(Vec<u32>, usize)> = HashSet::new();
        let mut queue = VecDeque::from([(start, 0usize)]);
        while let Some((marking, pos)) = queue.pop_front() {
            if pos == trace.len() && marking == goal {
                return true;
            }
            if !seen.insert((marking.clone(), pos)) {
                continue;
            }
            for t in &self.transitions {
                if t.inputs.iter().any(|&p| marking[p] == 0) {
                    continue;
                }
                let next_pos = match &t.label {
                    None => pos,
                    Some(l) if pos < trace.len() && trace[pos] == *l => pos + 1,
                    Some(_) => continue,
                };
                let mut m = marking.clone();
                t.inputs.iter().for_each(|&p| m[p] -= 1);
                t.outputs.iter().for_each(|&p| m[p] += 1);
                // The translation yields safe nets; a second token means the
                // search left the reachable state space of a sound net.
                if m.iter().any(|&c| c > 1) {
                    continue;
                }
                queue.push_back((m, next_pos));
            }
        }
        false
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph net {\n  rankdir=LR;\n");
        for p in 0..self.places {
            let extra = if p == self.source {
                ", xlabel=\"source\""
            } else if p == self.sink {
                ", xlabel=\"sink\""
            } else {
                ""
            };
            writeln!(s, "  p{p} [shape=circle, label=\"\"{extra}];").unwrap();
        }
        for (j, t) in self.transitions.iter().enumerate() {
            match &t.label {
                Some(l) => writeln!(s, "  t{j} [shape=box, label=\"{}\"];", dot_escape(l)).unwrap(),
                None => writeln!(
                    s,
                    "  t{j} [shape=box, label=\"\", style=filled, fillcolor=black, width=0.15];"
                )
                .unwrap(),
            }
        }
        for (from, to) in self.arcs() {
            writeln!(s, "  {from} -> {to};").unwrap();
        }
        s.push_str("}\n");
        s
    }

    pub fn to_pnml(&self) -> String {
        let mut s = String::from(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<pnml>\n  <net id=\"net\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">\n    <page id=\"page\">\n",
        );
        for p in 0..self.places {
            write!(s, "      <place id=\"p{p}\">").unwrap();
            if p == self.source {
                s.push_str("<initialMarking><text>1</text></initialMarking>");
            }
            s.push_str("</place>\n");
        }
        for (j, t) in self.transitions.iter().enumerate() {
            match &t.label {
                Some(l) => writeln!(
                    s,
                    "      <transition id=\"t{j}\"><name><text>{}</text></name></transition>",
                    xml_escape(l)
                )
                .unwrap(),
                None => writeln!(
                    s,
                    "      <transition id=\"t{j}\"><toolspecific tool=\"imr\" version=\"1\" activity=\"$invisible$\"/></transition>"
                )
                .unwrap(),
            }
        }
        for (k, (from, to)) in self.arcs().into_iter().enumerate() {
            writeln!(s, "      <arc id=\"a{k}\" source=\"{from}\" target=\"{to}\"/>").unwrap();
        }
        writeln!(
            s,
            "    </page>\n    <finalmarkings><marking><place idref=\"p{}\"><text>1</text></place></marking></finalmarkings>\n  </net>\n</pnml>",
            self.sink
        )
        .unwrap();
        s
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}
