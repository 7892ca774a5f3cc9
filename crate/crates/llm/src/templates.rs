//! Prompt templates shipped as repository assets.
//!
//! The bodies live under `assets/` and are embedded at compile time; the
//! test suite asserts the embedded constants byte-match the files. Each body
//! uses `{{SCENE}}` and `{{TASK}}` placeholders; rendering joins the scene
//! object list with `", "` and substitutes both.

use serde::{Deserialize, Serialize};

use crate::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    Ambiguity,
    Vanilla,
    Cot,
    SelfProbing,
    MultiStep,
    TopK,
}

impl TemplateName {
    pub const ALL: [TemplateName; 6] = [
        TemplateName::Ambiguity,
        TemplateName::Vanilla,
        TemplateName::Cot,
        TemplateName::SelfProbing,
        TemplateName::MultiStep,
        TemplateName::TopK,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::Ambiguity => "ambiguity",
            TemplateName::Vanilla => "vanilla",
            TemplateName::Cot => "cot",
            TemplateName::SelfProbing => "self_probing",
            TemplateName::MultiStep => "multi_step",
            TemplateName::TopK => "top_k",
        }
    }
}

impl std::str::FromStr for TemplateName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ambiguity" => Ok(TemplateName::Ambiguity),
            "vanilla" => Ok(TemplateName::Vanilla),
            "cot" => Ok(TemplateName::Cot),
            "self_probing" => Ok(TemplateName::SelfProbing),
            "multi_step" => Ok(TemplateName::MultiStep),
            "top_k" => Ok(TemplateName::TopK),
            other => Err(format!("unknown template {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: &'static str,
}

pub const AMBIGUITY_BODY: &str = include_str!("../assets/ambiguity.txt");
pub const VANILLA_BODY: &str = include_str!("../assets/vanilla.txt");
pub const COT_BODY: &str = include_str!("../assets/cot.txt");
pub const SELF_PROBING_BODY: &str = include_str!("../assets/self_probing.txt");
pub const MULTI_STEP_BODY: &str = include_str!("../assets/multi_step.txt");
pub const TOP_K_BODY: &str = include_str!("../assets/top_k.txt");

pub fn template(name: TemplateName) -> PromptTemplate {
    let body = match name {
        TemplateName::Ambiguity => AMBIGUITY_BODY,
        TemplateName::Vanilla => VANILLA_BODY,
        TemplateName::Cot => COT_BODY,
        TemplateName::SelfProbing => SELF_PROBING_BODY,
        TemplateName::MultiStep => MULTI_STEP_BODY,
        TemplateName::TopK => TOP_K_BODY,
    };
    PromptTemplate { name, body }
}

/// The four fixed target locations named by the ambiguity prompt (the
/// backtick in the shipped text is normalized to an apostrophe here).
pub const FIXED_LOCATIONS: [&str; 4] =
    ["user's hand", "top drawer", "bottom drawer", "garbage can"];

/// Substitutes `{{SCENE}}` (comma-joined object list) and `{{TASK}}` into
/// the template body. Errors if the scene is empty or a placeholder
/// survives substitution.
pub fn render_template(
    template: &PromptTemplate,
    scene: &[String],
    task: &str,
) -> Result<String, LlmError> {
    if scene.is_empty() {
        return Err(LlmError::EmptyScene);
    }
    let scene_list = scene.join(", ");
    let rendered = template
        .body
        .replace("{{SCENE}}", &scene_list)
        .replace("{{TASK}}", task);
    if let Some(pos) = rendered.find("{{") {
        let tail: String = rendered[pos..].chars().take(24).collect();
        return Err(LlmError::UnresolvedPlaceholder(tail));
    }
    Ok(rendered)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_templates_have_both_placeholders() {
        for name in TemplateName::ALL {
            let t = template(name);
            assert!(t.body.contains("{{SCENE}}"), "{name:?} missing SCENE");
            assert!(t.body.contains("{{TASK}}"), "{name:?} missing TASK");
        }
    }

    #[test]
    fn render_substitutes_scene_and_task() {
        let scene = vec!["Coke".to_string(), "Sprite".into(), "apple".into()];
        let t = template(TemplateName::Ambiguity);
        let prompt = render_template(&t, &scene, "give me something to drink").unwrap();
        assert!(prompt.contains("Coke, Sprite, apple"));
        assert!(prompt.contains("give me something to drink"));
        assert!(!prompt.contains("{{"));
        // The fixed location list survives verbatim.
        assert!(prompt.contains("top drawer, bottom drawer, garbage can"));
    }

    #[test]
    fn render_is_deterministic() {
        let scene = vec!["Coke".to_string()];
        let t = template(TemplateName::Vanilla);
        let a = render_template(&t, &scene, "x").unwrap();
        let b = render_template(&t, &scene, "x").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_scene_is_rejected() {
        let t = template(TemplateName::Ambiguity);
        assert!(matches!(
            render_template(&t, &[], "task"),
            Err(LlmError::EmptyScene)
        ));
    }
}
