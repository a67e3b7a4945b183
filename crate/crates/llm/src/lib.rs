//! Rule extraction through a chat model: the task prompt, tagged output
//! parsing, the validation and repair loop, and refinement sessions over a
//! pluggable transport.

pub mod prompt;
pub mod session;
pub mod tags;
pub mod transport;

use imr_core::declare::ValidationReport;
use thiserror::Error;

pub use prompt::{build_task_prompt, BundleOverrides, PromptBundle};
pub use session::{Proposal, RefinementSession, RuleEdit, SessionState};
pub use tags::{extract_tagged, TagError, Tagged};
pub use transport::{ChatMessage, ChatTransport, HttpTransport, ScriptRecord, ScriptedTransport, TransportError};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("no valid rules after {attempts} proposals\n{report}")]
    RepairExhausted { attempts: usize, report: ValidationReport },
    #[error("cannot {op} in state {state}")]
    InvalidState { op: &'static str, state: SessionState },
    #[error("feedback needs a discovered model")]
    NoModel,
    #[error("rules rejected\n{0}")]
    Rejected(ValidationReport),
}
