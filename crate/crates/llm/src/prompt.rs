//! The task-definition prompt: role, template catalog, output contract,
//! negative examples and few-shot exchanges, rendered as chat messages.

use std::fmt::Write as _;

use imr_core::declare::Template;
use serde::{Deserialize, Serialize};

use crate::tags::{QUESTIONS_CLOSE, QUESTIONS_OPEN, RULES_CLOSE, RULES_OPEN};
use crate::transport::{ChatMessage, Role};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub arity: usize,
    pub meaning: String,
}

impl CatalogEntry {
    fn of(t: Template) -> Self {
        Self {
            name: t.name().to_string(),
            arity: t.arity(),
            meaning: t.description().to_string(),
        }
    }

    fn signature(&self) -> &'static str {
        if self.arity == 1 {
            "(a)"
        } else {
            "(a, b)"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShot {
    pub description: String,
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeExample {
    pub output: String,
    pub why: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub role_statement: String,
    pub template_catalog: Vec<CatalogEntry>,
    pub output_contract: String,
    pub few_shots: Vec<FewShot>,
    pub negative_examples: Vec<NegativeExample>,
    /// `None` when the expert names the activities in the conversation.
    pub activity_list: Option<Vec<String>>,
}

/// Replacement parts for [`PromptBundle::new`]; unset fields keep the
/// defaults.
#[derive(Debug, Clone, Default)]
pub struct BundleOverrides {
    pub role_statement: Option<String>,
    pub few_shots: Option<Vec<FewShot>>,
    pub negative_examples: Option<Vec<NegativeExample>>,
}

const ROLE: &str = "You translate a domain expert's knowledge about a business process into \
declarative constraints for a process discovery algorithm. The expert describes how the process \
behaves; you answer with constraints that the discovered model must respect. When the description \
is ambiguous or incomplete, ask the expert short clarifying questions instead of guessing.";

fn default_few_shots() -> Vec<FewShot> {
    vec![
        FewShot {
            description: "Every order is registered exactly once. Shipping always happens after \
                          packing, and an order is either shipped or refunded, never both."
                .into(),
            rules: vec![
                "existence(Register Order)".into(),
                "at-most(Register Order)".into(),
                "response(Pack Order, Ship Order)".into(),
                "not-co-existence(Ship Order, Refund Order)".into(),
            ],
        },
        FewShot {
            description: "An invoice can only be paid once it has been approved, and whenever a \
                          reminder is sent the invoice is eventually paid."
                .into(),
            rules: vec![
                "precedence(Approve Invoice, Pay Invoice)".into(),
                "response(Send Reminder, Pay Invoice)".into(),
            ],
        },
    ]
}

fn default_negative_examples() -> Vec<NegativeExample> {
    vec![
        NegativeExample {
            output: "chain-response(Pack Order, Ship Order)".into(),
            why: "chain-response is not one of the supported templates".into(),
        },
        NegativeExample {
            output: "response(Ship Order)".into(),
            why: "response takes two activities".into(),
        },
        NegativeExample {
            output: "Here are the rules: response(Pack Order, Ship Order)".into(),
            why: "rules must be inside the tags, one per line, with no other text".into(),
        },
    ]
}

impl PromptBundle {
    pub fn new(activities: Option<Vec<String>>, overrides: BundleOverrides) -> Self {
        let output_contract = format!(
            "Put the constraints between {RULES_OPEN} and {RULES_CLOSE}, one per line, written as \
             template(activity) or template(activity, activity), with activity names spelled exactly \
             as listed. Add no additional text inside the tags. If you need more information first, \
             put your questions between {QUESTIONS_OPEN} and {QUESTIONS_CLOSE}, one per line, and \
             give no rules in that reply."
        );
        Self {
            role_statement: overrides.role_statement.unwrap_or_else(|| ROLE.to_string()),
            template_catalog: Template::ALL.into_iter().map(CatalogEntry::of).collect(),
            output_contract,
            few_shots: overrides.few_shots.unwrap_or_else(default_few_shots),
            negative_examples: overrides
                .negative_examples
                .unwrap_or_else(default_negative_examples),
            activity_list: activities,
        }
    }

    fn system_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{}\n", self.role_statement).unwrap();
        writeln!(s, "Supported templates:").unwrap();
        for e in &self.template_catalog {
            writeln!(s, "- {}{}: {}", e.name, e.signature(), e.meaning).unwrap();
        }
        writeln!(s, "\nOutput format: {}", self.output_contract).unwrap();
        if !self.negative_examples.is_empty() {
            writeln!(s, "\nNever answer like this:").unwrap();
            for n in &self.negative_examples {
                writeln!(s, "- `{}`: {}", n.output, n.why).unwrap();
            }
        }
        match &self.activity_list {
            Some(acts) => {
                writeln!(s, "\nActivities recorded in the event log:").unwrap();
                for a in acts {
                    writeln!(s, "- {a}").unwrap();
                }
            }
            None => writeln!(s, "\nThe expert will name the activities of the process.").unwrap(),
        }
        s.trim_end().to_string()
    }

    /// System message followed by one user/assistant pair per few-shot.
    pub fn render(&self) -> Vec<ChatMessage> {
        let mut msgs = vec![ChatMessage::new(Role::System, self.system_text())];
        for shot in &self.few_shots {
            msgs.push(ChatMessage::new(Role::User, shot.description.clone()));
            msgs.push(ChatMessage::new(Role::Assistant, rules_reply(&shot.rules)));
        }
        msgs
    }
}

/// Wraps rule lines in the rules tags.
pub fn rules_reply(lines: &[String]) -> String {
    let mut s = format!("{RULES_OPEN}\n");
    for l in lines {
        writeln!(s, "{l}").unwrap();
    }
    s.push_str(RULES_CLOSE);
    s
}

/// Renders the task prompt for a log's activities, or for the expert-named
/// mode when `activities` is `None`.
pub fn build_task_prompt(activities: Option<&[String]>, overrides: BundleOverrides) -> Vec<ChatMessage> {
    PromptBundle::new(activities.map(<[String]>::to_vec), overrides).render()
}
