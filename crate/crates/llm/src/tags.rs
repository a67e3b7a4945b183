//! Locating the tagged rule and question blocks in an assistant reply.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RULES_OPEN: &str = "[RULES]";
pub const RULES_CLOSE: &str = "[/RULES]";
pub const QUESTIONS_OPEN: &str = "[QUESTIONS]";
pub const QUESTIONS_CLOSE: &str = "[/QUESTIONS]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Rules,
    Questions,
}

impl BlockKind {
    fn tags(self) -> (&'static str, &'static str) {
        match self {
            BlockKind::Rules => (RULES_OPEN, RULES_CLOSE),
            BlockKind::Questions => (QUESTIONS_OPEN, QUESTIONS_CLOSE),
        }
    }
}

impl std::fmt::Display for BlockKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tags().0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("{0} block is not properly opened and closed")]
    UnbalancedTags(BlockKind),
    #[error("more than one {0} block")]
    MultipleBlocks(BlockKind),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tagged {
    pub rules_block: Option<String>,
    pub questions_block: Option<String>,
}

fn block(text: &str, kind: BlockKind) -> Result<Option<String>, TagError> {
    let (open, close) = kind.tags();
    let opens: Vec<usize> = text.match_indices(open).map(|(i, _)| i).collect();
    let closes: Vec<usize> = text.match_indices(close).map(|(i, _)| i).collect();
    match (opens.as_slice(), closes.as_slice()) {
        ([], []) => Ok(None),
        ([o], [c]) if o + open.len() <= *c => Ok(Some(text[o + open.len()..*c].trim().to_string())),
        (o, c) if o.len() > 1 && o.len() == c.len() => Err(TagError::MultipleBlocks(kind)),
        _ => Err(TagError::UnbalancedTags(kind)),
    }
}

/// Content of the rules and questions blocks; prose around them is ignored.
pub fn extract_tagged(text: &str) -> Result<Tagged, TagError> {
    Ok(Tagged {
        rules_block: block(text, BlockKind::Rules)?,
        questions_block: block(text, BlockKind::Questions)?,
    })
}

/// Question lines with list markers such as `1.`, `-` or `*` removed.
pub fn split_questions(block: &str) -> Vec<String> {
    block
        .lines()
        .map(|l| {
            let l = l.trim();
            let l = l.trim_start_matches(|c: char| c.is_ascii_digit());
            let l = l.strip_prefix('.').or_else(|| l.strip_prefix(')')).unwrap_or(l);
            l.trim_start_matches(['-', '*']).trim().to_string()
        })
        .filter(|l| !l.is_empty())
        .collect()
}
