//! Command-line and HTTP front ends. Both run discovery through
//! `imr_core::report::run_discovery`, so a model exported by the command
//! line and one served over HTTP are identical for the same inputs.

pub mod commands;
pub mod service;
pub mod store;

use std::path::{Path, PathBuf};

use imr_core::declare::ValidationReport;
use imr_core::log::{parse_csv_log, parse_variants, CsvConfig, EventLog};
use imr_llm::{ChatTransport, HttpTransport, LlmError, ScriptedTransport, TransportError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("rule validation failed\n{0}")]
    Validation(ValidationReport),
    #[error("{0}")]
    Unanswered(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("no valid rules after {attempts} proposals\n{report}")]
    RepairExhausted { attempts: usize, report: ValidationReport },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// 0 ok, 2 parse, 3 validation, 4 transport, 5 internal, 6 repair loop
    /// gave up.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) | CliError::Unanswered(_) => 3,
            CliError::Transport(_) => 4,
            CliError::Internal(_) => 5,
            CliError::RepairExhausted { .. } => 6,
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::Transport(t) => CliError::Transport(t),
            LlmError::RepairExhausted { attempts, report } => CliError::RepairExhausted { attempts, report },
            LlmError::Rejected(r) => CliError::Validation(r),
            other => CliError::Internal(other.to_string()),
        }
    }
}

/// Where chat replies come from: a recorded script or a live endpoint
/// configured through the environment.
#[derive(Debug, Clone)]
pub enum TransportConfig {
    Scripted(PathBuf),
    Http,
}

impl TransportConfig {
    pub fn from_flag(transcript: Option<PathBuf>) -> Self {
        transcript.map_or(TransportConfig::Http, TransportConfig::Scripted)
    }

    /// A transport positioned after `consumed` earlier exchanges, so a
    /// stored session continues where its script left off.
    pub fn open(&self, consumed: usize) -> Result<Box<dyn ChatTransport>, TransportError> {
        Ok(match self {
            TransportConfig::Scripted(path) => Box::new(ScriptedTransport::load(path)?.starting_at(consumed)),
            TransportConfig::Http => Box::new(HttpTransport::from_env()?),
        })
    }
}

/// Reads an event log: `.csv` files as event tables with the default
/// columns, anything else as a variants file.
pub fn load_log(path: &Path) -> Result<EventLog, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_log_text(&text, path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn parse_log_text(text: &str, csv: bool) -> Result<EventLog, imr_core::log::LogError> {
    if csv {
        parse_csv_log(text, &CsvConfig::default())
    } else {
        parse_variants(text)
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}
