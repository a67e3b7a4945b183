mod common;

use imr_core::declare::Template;
use imr_llm::prompt::FewShot;
use imr_llm::transport::{request_digest, Role};
use imr_llm::{build_task_prompt, BundleOverrides, PromptBundle};

fn motivating_labels() -> Vec<String> {
    common::log("motivating/log.variants").alphabet().iter().cloned().collect()
}

#[test]
fn lists_activities_and_templates() {
    let acts = motivating_labels();
    let msgs = build_task_prompt(Some(&acts), BundleOverrides::default());
    assert_eq!(msgs[0].role, Role::System);
    let system = &msgs[0].content;
    assert_eq!(acts.len(), 6);
    for a in &acts {
        assert!(system.contains(&format!("- {a}\n")) || system.ends_with(&format!("- {a}")), "{a}");
    }
    for t in Template::ALL {
        let sig = if t.arity() == 1 { "(a)" } else { "(a, b)" };
        assert!(system.contains(&format!("- {}{sig}: {}", t.name(), t.description())), "{t}");
    }
    assert!(system.contains("[RULES]") && system.contains("[QUESTIONS]"));
}

#[test]
fn catalog_sentences() {
    let b = PromptBundle::new(None, BundleOverrides::default());
    assert_eq!(b.template_catalog.len(), 8);
    let response = b.template_catalog.iter().find(|e| e.name == "response").unwrap();
    assert_eq!(response.meaning, "If a occurs, then b occurs after a.");
    assert_eq!(response.arity, 2);
}

#[test]
fn few_shots_render_as_exchanges() {
    let acts = motivating_labels();
    let full = build_task_prompt(Some(&acts), BundleOverrides::default());
    assert_eq!(full.len(), 1 + 2 * PromptBundle::new(None, BundleOverrides::default()).few_shots.len());
    assert_eq!(full[1].role, Role::User);
    assert_eq!(full[2].role, Role::Assistant);
    assert!(full[2].content.starts_with("[RULES]\n") && full[2].content.ends_with("[/RULES]"));

    let bare = build_task_prompt(
        Some(&acts),
        BundleOverrides { few_shots: Some(Vec::new()), ..Default::default() },
    );
    assert_eq!(bare.len(), 1);
    assert_eq!(bare[0], full[0]);

    let custom = build_task_prompt(
        None,
        BundleOverrides {
            few_shots: Some(vec![FewShot { description: "x".into(), rules: vec!["existence(x)".into()] }]),
            ..Default::default()
        },
    );
    assert_eq!(custom[2].content, "[RULES]\nexistence(x)\n[/RULES]");
    assert!(custom[0].content.contains("expert will name the activities"));
}

#[test]
fn rendering_is_deterministic() {
    let acts = motivating_labels();
    let a = build_task_prompt(Some(&acts), BundleOverrides::default());
    let b = build_task_prompt(Some(&acts), BundleOverrides::default());
    assert_eq!(request_digest(&a), request_digest(&b));
}
