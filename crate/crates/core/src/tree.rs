use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::discovery::Operator;

/// Block-structured process model.
///
/// Loop nodes hold exactly two children, `[body, redo]`. Other operator nodes
/// hold two or more; the smart constructors flatten nested sequence, choice
/// and parallel nodes of the same kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProcessTree {
    Activity(String),
    Silent,
    Operator(Operator, Vec<ProcessTree>),
}

impl ProcessTree {
    pub fn activity(label: impl Into<String>) -> Self {
        ProcessTree::Activity(label.into())
    }

    pub fn silent() -> Self {
        ProcessTree::Silent
    }

    pub fn seq(children: Vec<ProcessTree>) -> Self {
        Self::node(Operator::Sequence, children)
    }

    pub fn xor(children: Vec<ProcessTree>) -> Self {
        Self::node(Operator::Xor, children)
    }

    pub fn par(children: Vec<ProcessTree>) -> Self {
        Self::node(Operator::Parallel, children)
    }

    pub fn looped(body: ProcessTree, redo: ProcessTree) -> Self {
        ProcessTree::Operator(Operator::Loop, vec![body, redo])
    }

    /// Operator node with same-kind children inlined. A single child is
    /// returned as is.
    pub fn node(op: Operator, children: Vec<ProcessTree>) -> Self {
        if op == Operator::Loop {
            assert_eq!(children.len(), 2, "loop nodes take body and redo");
            return ProcessTree::Operator(op, children);
        }
        let mut flat = Vec::with_capacity(children.len());
        for child in children {
            match child {
                ProcessTree::Operator(o, inner) if o == op => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        ProcessTree::Operator(op, flat)
    }

    /// `xor(tau, self)`.
    pub fn optional(self) -> Self {
        Self::xor(vec![ProcessTree::Silent, self])
    }

    /// Labels of all activity leaves, with repetitions, in left-to-right order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ProcessTree::Activity(a) => out.push(a),
            ProcessTree::Silent => {}
            ProcessTree::Operator(_, children) => {
                children.iter().for_each(|c| c.collect_leaves(out))
            }
        }
    }

    pub fn alphabet(&self) -> BTreeSet<String> {
        self.leaves().into_iter().map(str::to_string).collect()
    }

    pub fn is_loop_free(&self) -> bool {
        match self {
            ProcessTree::Operator(Operator::Loop, _) => false,
            ProcessTree::Operator(_, children) => children.iter().all(Self::is_loop_free),
            _ => true,
        }
    }

    /// Checks arity: loops have two children, other operators at least two.
    pub fn is_well_formed(&self) -> bool {
        match self {
            ProcessTree::Operator(op, children) => {
                let arity_ok = if *op == Operator::Loop {
                    children.len() == 2
                } else {
                    children.len() >= 2
                };
                arity_ok && children.iter().all(Self::is_well_formed)
            }
            _ => true,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            ProcessTree::Operator(_, children) => 1 + children.iter().map(Self::node_count).sum::<usize>(),
            _ => 1,
        }
    }
}

fn write_label(f: &mut fmt::Formatter<'_>, label: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in label.chars() {
        if c == '\'' || c == '\\' {
            f.write_str("\\")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("'")
}

/// Tree-text notation, e.g. `seq('a', xor(tau, 'b'))`.
impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTree::Activity(a) => write_label(f, a),
            ProcessTree::Silent => f.write_str("tau"),
            ProcessTree::Operator(op, children) => {
                write!(f, "{}(", op.glyph())?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum TreeDoc {
    Activity { label: String },
    Silent,
    Operator { operator: Operator, children: Vec<TreeDoc> },
}

impl From<&ProcessTree> for TreeDoc {
    fn from(t: &ProcessTree) -> Self {
        match t {
            ProcessTree::Activity(a) => TreeDoc::Activity { label: a.clone() },
            ProcessTree::Silent => TreeDoc::Silent,
            ProcessTree::Operator(op, children) => TreeDoc::Operator {
                operator: *op,
                children: children.iter().map(TreeDoc::from).collect(),
            },
        }
    }
}

impl TryFrom<TreeDoc> for ProcessTree {
    type Error = String;

    fn try_from(d: TreeDoc) -> Result<Self, Self::Error> {
        Ok(match d {
            TreeDoc::Activity { label } => ProcessTree::Activity(label),
            TreeDoc::Silent => ProcessTree::Silent,
            TreeDoc::Operator { operator, children } => {
                let children = children
                    .into_iter()
                    .map(ProcessTree::try_from)
                    .collect::<Result<Vec<_>, _>>()?;
                let node = ProcessTree::Operator(operator, children);
                if !node.is_well_formed() {
                    return Err(format!("`{}` node has the wrong number of children", operator.glyph()));
                }
                node
            }
        })
    }
}

impl Serialize for ProcessTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TreeDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProcessTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ProcessTree::try_from(TreeDoc::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
