//! Process-tree semantics, workflow nets, and serialization.

mod lang;
mod net;
mod text;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use lang::{
    accepts, enumerate_language, enumerate_language_capped, model_satisfies, verdict_on,
    BoundedLanguage, Verdict, DEFAULT_LANGUAGE_CAP,
};
pub use net::{to_workflow_net, Transition, WorkflowNet};
pub use text::parse_tree_text;

use crate::tree::ProcessTree;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("bounded language exceeds {0} traces")]
    ExplosionGuard(usize),
    #[error("tree text, offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("tree document: {0}")]
    Document(String),
    #[error("unknown export format `{0}`")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    TreeText,
    TreeJson,
    Dot,
    Pnml,
}

impl ExportFormat {
    pub const ALL: [ExportFormat; 4] = [
        ExportFormat::TreeText,
        ExportFormat::TreeJson,
        ExportFormat::Dot,
        ExportFormat::Pnml,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExportFormat::TreeText => "tree-text",
            ExportFormat::TreeJson => "tree-json",
            ExportFormat::Dot => "dot",
            ExportFormat::Pnml => "pnml",
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExportFormat {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExportFormat::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| ModelError::UnknownFormat(s.to_string()))
    }
}

pub fn export(tree: &ProcessTree, format: ExportFormat) -> String {
    match format {
        ExportFormat::TreeText => format!("{tree}\n"),
        ExportFormat::TreeJson => {
            let mut s = serde_json::to_string_pretty(tree).expect("trees always serialize");
            s.push('\n');
            s
        }
        ExportFormat::Dot => to_workflow_net(tree).to_dot(),
        ExportFormat::Pnml => to_workflow_net(tree).to_pnml(),
    }
}

/// Reads a tree from either of the two tree formats.
pub fn import(text: &str, format: ExportFormat) -> Result<ProcessTree, ModelError> {
    match format {
        ExportFormat::TreeText => parse_tree_text(text),
        ExportFormat::TreeJson => {
            serde_json::from_str(text).map_err(|e| ModelError::Document(e.to_string()))
        }
        other => Err(ModelError::UnknownFormat(format!("{other} cannot be read back"))),
    }
}
