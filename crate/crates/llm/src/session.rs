//! A refinement session: the expert conversation, the validated rule set,
//! and the models discovered from it.
//!
//! Every turn works on a copy of the session and commits only when the
//! transport answered, so a failed call leaves the session untouched.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use imr_core::declare::{
    parse_rules_lenient, validate_rules, validate_text, DeclareRule, IssueKind, Severity, ValidationItem,
    ValidationReport,
};
use imr_core::tree::ProcessTree;
use serde::{Deserialize, Serialize};

use crate::prompt::{BundleOverrides, PromptBundle};
use crate::tags::{extract_tagged, split_questions, RULES_CLOSE, RULES_OPEN};
use crate::transport::{request_digest, ChatMessage, ChatTransport, Role, ScriptRecord, ScriptedTransport};
use crate::LlmError;

/// Proposals per turn, the first one included.
pub const DEFAULT_MAX_REPAIRS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionState {
    Init,
    ContextGiven,
    AwaitingAnswers,
    RulesProposed,
    Repairing,
    Validated,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SessionState::Init => "init",
            SessionState::ContextGiven => "context-given",
            SessionState::AwaitingAnswers => "awaiting-answers",
            SessionState::RulesProposed => "rules-proposed",
            SessionState::Repairing => "repairing",
            SessionState::Validated => "validated",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Expert,
    Assistant,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub rule: DeclareRule,
    pub enabled: bool,
    /// Conversation round that introduced the rule.
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelIteration {
    pub rules: Vec<DeclareRule>,
    pub sup: f64,
    pub tree: ProcessTree,
}

/// Whether a round's rules replace the current set or extend it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundKind {
    Context,
    Feedback,
}

/// One expert-side action, kept so a session can be rebuilt from its
/// recorded exchanges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum JournalEntry {
    Expert { text: String },
    Feedback { text: String },
    EditRules { edits: Vec<RuleEdit> },
    Model { iteration: ModelIteration },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEdit {
    pub rule: String,
    #[serde(default = "enabled_default")]
    pub enabled: bool,
}

fn enabled_default() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    Questions(Vec<String>),
    Rules {
        /// The validated parse of the final reply.
        rules: Vec<DeclareRule>,
        /// Rules that were not in the set before this turn.
        added: Vec<DeclareRule>,
        report: ValidationReport,
        repairs: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementSession {
    id: String,
    log_ref: Option<String>,
    alphabet: BTreeSet<String>,
    bundle: PromptBundle,
    max_repairs: usize,
    state: SessionState,
    round: usize,
    round_kind: RoundKind,
    transcript: Vec<TranscriptEntry>,
    current_rules: Vec<RuleEntry>,
    validation_history: Vec<ValidationReport>,
    model_iterations: Vec<ModelIteration>,
    pending_questions: Vec<String>,
    exchanges: Vec<ScriptRecord>,
    journal: Vec<JournalEntry>,
}

enum Reading {
    Questions(Vec<String>),
    Rules(Vec<DeclareRule>, ValidationReport),
    Invalid(ValidationReport),
}

fn reply_problem(message: String) -> ValidationReport {
    ValidationReport::new(vec![ValidationItem {
        index: 0,
        severity: Severity::Error,
        kind: IssueKind::MalformedLine,
        message,
        suggestion: None,
    }])
}

/// The follow-up sent after an invalid reply: one line per error with the
/// offending rule line and a suggestion when there is one.
pub fn repair_message(report: &ValidationReport, rules_block: Option<&str>) -> String {
    let lines = rules_block.map(parse_rules_lenient).unwrap_or_default();
    let mut s = String::from("Your last reply could not be used. Problems found:\n");
    for item in report.errors() {
        write!(s, "- ").unwrap();
        if let Some(l) = lines.get(item.index) {
            write!(s, "rule line {} `{}`: ", item.index + 1, l.text).unwrap();
        }
        write!(s, "{:?}: {}", item.kind, item.message).unwrap();
        if let Some(sug) = &item.suggestion {
            write!(s, "; did you mean `{sug}`?").unwrap();
        }
        s.push('\n');
    }
    write!(
        s,
        "Reply with the complete corrected list of constraints between {RULES_OPEN} and {RULES_CLOSE}."
    )
    .unwrap();
    s
}

impl RefinementSession {
    /// A session over `alphabet`; the prompt lists these activities, or
    /// leaves naming them to the expert when the alphabet is empty.
    pub fn new(id: impl Into<String>, alphabet: BTreeSet<String>) -> Self {
        let listed = (!alphabet.is_empty()).then(|| alphabet.iter().cloned().collect());
        Self {
            id: id.into(),
            log_ref: None,
            bundle: PromptBundle::new(listed, BundleOverrides::default()),
            alphabet,
            max_repairs: DEFAULT_MAX_REPAIRS,
            state: SessionState::Init,
            round: 0,
            round_kind: RoundKind::Context,
            transcript: Vec::new(),
            current_rules: Vec::new(),
            validation_history: Vec::new(),
            model_iterations: Vec::new(),
            pending_questions: Vec::new(),
            exchanges: Vec::new(),
            journal: Vec::new(),
        }
    }

    pub fn with_log_ref(mut self, log_ref: impl Into<String>) -> Self {
        self.log_ref = Some(log_ref.into());
        self
    }

    pub fn with_bundle(mut self, bundle: PromptBundle) -> Self {
        self.bundle = bundle;
        self
    }

    pub fn with_max_repairs(mut self, n: usize) -> Self {
        self.max_repairs = n.max(1);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn log_ref(&self) -> Option<&str> {
        self.log_ref.as_deref()
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    pub fn current_rules(&self) -> &[RuleEntry] {
        &self.current_rules
    }

    /// Rules with the enabled flag set, in set order.
    pub fn enabled_rules(&self) -> Vec<DeclareRule> {
        self.current_rules
            .iter()
            .filter(|e| e.enabled)
            .map(|e| e.rule.clone())
            .collect()
    }

    pub fn validation_history(&self) -> &[ValidationReport] {
        &self.validation_history
    }

    pub fn model_iterations(&self) -> &[ModelIteration] {
        &self.model_iterations
    }

    pub fn pending_questions(&self) -> &[String] {
        &self.pending_questions
    }

    /// Every transport exchange so far, as a replayable script.
    pub fn exchanges(&self) -> &[ScriptRecord] {
        &self.exchanges
    }

    pub fn journal(&self) -> &[JournalEntry] {
        &self.journal
    }

    /// The full message list the next transport call would start from.
    pub fn messages(&self) -> Vec<ChatMessage> {
        let mut msgs = self.bundle.render();
        msgs.extend(self.transcript.iter().map(|e| {
            let role = match e.speaker {
                Speaker::Expert => Role::User,
                Speaker::Assistant => Role::Assistant,
                Speaker::System => Role::System,
            };
            ChatMessage::new(role, e.text.clone())
        }));
        msgs
    }

    fn say(&mut self, speaker: Speaker, text: impl Into<String>) {
        self.transcript.push(TranscriptEntry { speaker, text: text.into() });
    }

    fn call(&mut self, transport: &dyn ChatTransport) -> Result<String, LlmError> {
        let msgs = self.messages();
        let reply = transport.send(&msgs)?;
        self.exchanges.push(ScriptRecord {
            digest: Some(request_digest(&msgs)),
            response: reply.clone(),
        });
        self.say(Speaker::Assistant, reply.clone());
        Ok(reply)
    }

    fn read_reply(&self, reply: &str) -> (Reading, Option<String>) {
        let tagged = match extract_tagged(reply) {
            Ok(t) => t,
            Err(e) => return (Reading::Invalid(reply_problem(e.to_string())), None),
        };
        match (tagged.rules_block, tagged.questions_block) {
            (Some(block), _) => {
                let (rules, report) = validate_text(&block, &self.alphabet);
                let reading = if report.has_errors() {
                    Reading::Invalid(report)
                } else {
                    Reading::Rules(rules, report)
                };
                (reading, Some(block))
            }
            (None, Some(q)) => {
                let qs = split_questions(&q);
                if qs.is_empty() {
                    (Reading::Invalid(reply_problem("the questions block is empty".into())), None)
                } else {
                    (Reading::Questions(qs), None)
                }
            }
            (None, None) => (
                Reading::Invalid(reply_problem(format!(
                    "the reply has no {RULES_OPEN} block and no questions block"
                ))),
                None,
            ),
        }
    }

    /// Merges validated rules into the set and returns the additions plus
    /// any merge warnings appended to `report`.
    fn merge(&mut self, rules: &[DeclareRule], mut report: ValidationReport) -> (Vec<DeclareRule>, ValidationReport) {
        let round = self.round;
        let mut added = Vec::new();
        match self.round_kind {
            RoundKind::Context => {
                self.current_rules.clear();
                for r in rules {
                    if !self.current_rules.iter().any(|e| &e.rule == r) {
                        self.current_rules.push(RuleEntry { rule: r.clone(), enabled: true, round });
                        added.push(r.clone());
                    }
                }
            }
            RoundKind::Feedback => {
                let before = self.current_rules.len();
                for (i, r) in rules.iter().enumerate() {
                    if self.current_rules.iter().any(|e| &e.rule == r) {
                        if !added.contains(r) {
                            report.items.push(ValidationItem {
                                index: i,
                                severity: Severity::Warning,
                                kind: IssueKind::DuplicateRule,
                                message: format!("`{r}` is already in the rule set"),
                                suggestion: None,
                            });
                        }
                        continue;
                    }
                    self.current_rules.push(RuleEntry { rule: r.clone(), enabled: true, round });
                    added.push(r.clone());
                }
                let all: Vec<DeclareRule> = self.current_rules.iter().map(|e| e.rule.clone()).collect();
                let merged = validate_rules(&all, &self.alphabet);
                report.items.extend(
                    merged
                        .items
                        .into_iter()
                        .filter(|i| i.kind == IssueKind::ContradictoryPair && i.index >= before),
                );
                report = ValidationReport::new(report.items);
            }
        }
        (added, report)
    }

    /// Sends the conversation, then validates and repairs until a reply
    /// holds valid rules or questions. Commits to `self` unless the
    /// transport failed.
    fn turn(&mut self, transport: &dyn ChatTransport, mut work: Self, entry: JournalEntry) -> Result<Proposal, LlmError> {
        let before = self.state;
        let mut reply = work.call(transport)?;
        let mut attempts = 1;
        let outcome = loop {
            let (reading, block) = work.read_reply(&reply);
            match reading {
                Reading::Questions(qs) => {
                    work.state = SessionState::AwaitingAnswers;
                    work.pending_questions = qs.clone();
                    break Ok(Proposal::Questions(qs));
                }
                Reading::Rules(rules, report) => {
                    work.state = SessionState::RulesProposed;
                    let (added, report) = work.merge(&rules, report);
                    work.validation_history.push(report.clone());
                    work.pending_questions.clear();
                    work.state = SessionState::Validated;
                    break Ok(Proposal::Rules {
                        rules,
                        added,
                        report,
                        repairs: attempts - 1,
                    });
                }
                Reading::Invalid(report) => {
                    work.validation_history.push(report.clone());
                    if attempts >= work.max_repairs {
                        work.state = before;
                        break Err(LlmError::RepairExhausted { attempts, report });
                    }
                    work.state = SessionState::Repairing;
                    work.say(Speaker::System, repair_message(&report, block.as_deref()));
                    reply = work.call(transport)?;
                    attempts += 1;
                }
            }
        };
        work.journal.push(entry);
        *self = work;
        outcome
    }

    /// Business context or answers to the model's questions. Rules from
    /// this round replace the current set, unless the round was opened by
    /// feedback.
    pub fn propose_rules(&mut self, transport: &dyn ChatTransport, expert_text: &str) -> Result<Proposal, LlmError> {
        let mut work = self.clone();
        match self.state {
            SessionState::Init | SessionState::ContextGiven => {
                work.round += 1;
                work.round_kind = RoundKind::Context;
                work.state = SessionState::ContextGiven;
            }
            SessionState::AwaitingAnswers => {}
            s => return Err(LlmError::InvalidState { op: "propose rules", state: s }),
        }
        work.say(Speaker::Expert, expert_text);
        self.turn(transport, work, JournalEntry::Expert { text: expert_text.to_string() })
    }

    /// Feedback on the latest model. The model's tree text and the current
    /// rules go along with the feedback; returned rules extend the set.
    pub fn integrate_feedback(&mut self, transport: &dyn ChatTransport, feedback: &str) -> Result<Proposal, LlmError> {
        if self.state != SessionState::Validated {
            return Err(LlmError::InvalidState { op: "integrate feedback", state: self.state });
        }
        let latest = self.model_iterations.last().ok_or(LlmError::NoModel)?;
        let mut grounding = format!("Model discovered with the current rules:\n{}\n\nCurrent rules:\n", latest.tree);
        for e in &self.current_rules {
            let off = if e.enabled { "" } else { " (disabled)" };
            writeln!(grounding, "{}{off}", e.rule).unwrap();
        }
        let mut work = self.clone();
        work.round += 1;
        work.round_kind = RoundKind::Feedback;
        work.say(Speaker::System, grounding.trim_end());
        work.say(Speaker::Expert, feedback);
        self.turn(transport, work, JournalEntry::Feedback { text: feedback.to_string() })
    }

    /// Replaces the rule set with manually edited rules. Nothing changes
    /// when any edit fails validation.
    pub fn edit_rules(&mut self, edits: &[RuleEdit]) -> Result<ValidationReport, LlmError> {
        let text: String = edits.iter().map(|e| format!("{}\n", e.rule.replace('\n', " "))).collect();
        let (rules, report) = validate_text(&text, &self.alphabet);
        if report.has_errors() || rules.len() != edits.len() {
            return Err(LlmError::Rejected(report));
        }
        let mut next: Vec<RuleEntry> = Vec::new();
        for (rule, edit) in rules.into_iter().zip(edits) {
            if let Some(e) = next.iter_mut().find(|e| e.rule == rule) {
                e.enabled |= edit.enabled;
                continue;
            }
            let round = self
                .current_rules
                .iter()
                .find(|e| e.rule == rule)
                .map_or(self.round, |e| e.round);
            next.push(RuleEntry { rule, enabled: edit.enabled, round });
        }
        self.current_rules = next;
        self.validation_history.push(report.clone());
        self.pending_questions.clear();
        self.state = SessionState::Validated;
        self.journal.push(JournalEntry::EditRules { edits: edits.to_vec() });
        Ok(report)
    }

    pub fn record_model(&mut self, iteration: ModelIteration) {
        self.journal.push(JournalEntry::Model { iteration: iteration.clone() });
        self.model_iterations.push(iteration);
    }

    /// Rebuilds the session from its journal, answering every transport
    /// call from the recorded exchanges.
    pub fn replay(&self) -> Result<Self, LlmError> {
        let transport = ScriptedTransport::new(self.exchanges.clone());
        let mut s = Self {
            id: self.id.clone(),
            log_ref: self.log_ref.clone(),
            alphabet: self.alphabet.clone(),
            bundle: self.bundle.clone(),
            max_repairs: self.max_repairs,
            ..Self::new("", BTreeSet::new())
        };
        for entry in &self.journal {
            let r = match entry {
                JournalEntry::Expert { text } => s.propose_rules(&transport, text).map(drop),
                JournalEntry::Feedback { text } => s.integrate_feedback(&transport, text).map(drop),
                JournalEntry::EditRules { edits } => s.edit_rules(edits).map(drop),
                JournalEntry::Model { iteration } => {
                    s.record_model(iteration.clone());
                    Ok(())
                }
            };
            match r {
                Ok(()) | Err(LlmError::RepairExhausted { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(s)
    }
}
