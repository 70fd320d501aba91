use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Belief, BeliefEntry};
use crate::model::{display_from_label, Skill};
use crate::runner::AttemptRecord;

const SKILL_SELECTION_PROMPT: &str = include_str!("../../assets/prompts/skill_selection.txt");

/// Everything the language-model planner sees for one decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerContext {
    /// Tool name as written in prose, e.g. "plastic fork".
    pub tool: String,
    pub calibration_summary: String,
    pub skill_descriptions: String,
    pub history: String,
    pub target: BeliefEntry,
}

impl PlannerContext {
    pub fn new(tool: &str, calibration_summary: &str, history: String, target: BeliefEntry) -> Self {
        Self {
            tool: tool.replace('_', " "),
            calibration_summary: calibration_summary.trim_end().to_string(),
            skill_descriptions: Skill::ALL.iter().map(|s| s.description()).collect::<Vec<_>>().join("\n"),
            history,
            target,
        }
    }
}

/// Attempt history grouped by item, using current belief modes for the
/// property lines.
pub fn render_history(history: &[AttemptRecord], belief: &Belief) -> String {
    let mut blocks: Vec<String> = Vec::new();
    let mut seen = Vec::new();
    for record in history {
        if seen.contains(&record.item_id) {
            continue;
        }
        seen.push(record.item_id);
        let mut block = format!("{}:\n", display_from_label(&record.label));
        if let Some(entry) = belief.entries.get(&record.item_id) {
            let [s, m, v] = entry.modes();
            block.push_str(&format!(
                "shape: {}\nsize: {}\nsoftness: {s}\nmoisture: {m}\nviscosity: {v}\n",
                entry.shape.name(),
                entry.size.name()
            ));
        }
        for attempt in history.iter().filter(|r| r.item_id == record.item_id) {
            let outcome = if attempt.success { "success" } else { "failure" };
            block.push_str(&format!("{}: {outcome}\n", attempt.skill));
        }
        blocks.push(block);
    }
    blocks.join("\n").trim_end().to_string()
}

pub fn build_planner_prompt(ctx: &PlannerContext) -> String {
    let [s, m, v] = ctx.target.modes();
    SKILL_SELECTION_PROMPT
        .replace("{calibration_summary}", &ctx.calibration_summary)
        .replace("{skill_descriptions}", &ctx.skill_descriptions)
        .replace("{history}", &ctx.history)
        .replace("{tool}", &ctx.tool)
        .replace("{food}", &display_from_label(&ctx.target.label))
        .replace("{shape}", &ctx.target.shape.title())
        .replace("{size}", ctx.target.size.name())
        .replace("{softness}", &s.to_string())
        .replace("{moisture}", &m.to_string())
        .replace("{viscosity}", &v.to_string())
}

/// Skill named after the last `Answer:` in a planner reply.
pub fn parse_skill_answer(text: &str) -> Result<Skill> {
    let start = text.rfind("Answer:").ok_or_else(|| Error::Parse("reply has no `Answer:`".into()))?;
    let token = text[start + "Answer:".len()..]
        .split_whitespace()
        .next()
        .ok_or_else(|| Error::Parse("empty answer".into()))?;
    token.parse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{init_prior, PriorTable};
    use crate::model::ItemId;

    fn ctx(history: String) -> PlannerContext {
        PlannerContext::new("plastic_fork", "summary text\n", history, init_prior("tofu", &PriorTable::default()))
    }

    #[test]
    fn tofu_prompt_contains_instruction_line() {
        let text = build_planner_prompt(&ctx(String::new()));
        assert!(text.contains("select an action from ['skewer, 'scoop', 'twirl', 'dip']"));
        assert!(text.contains("This is a food item: Tofu. <image>"));
        assert!(text.contains("Food Item: Tofu\nShape: Cubic\nSize: bite-sized\nSoftness: 4\nMoisture: 3\nViscosity: 2\n"));
        assert!(text.contains("using a plastic fork"));
        assert!(text.starts_with("summary text\n"));
    }

    #[test]
    fn empty_history_keeps_section() {
        let text = build_planner_prompt(&ctx(String::new()));
        assert!(text.contains("The attempt history is summarized as follows:\n\n"));
        assert_eq!(text, build_planner_prompt(&ctx(String::new())));
    }

    #[test]
    fn history_format() {
        let mut belief = Belief::default();
        belief.entries.insert(ItemId(3), init_prior("steak", &PriorTable::default()));
        let record = |skill, success| AttemptRecord {
            plate_id: "p".into(),
            item_id: ItemId(3),
            label: "steak".into(),
            attempt_index: 1,
            skill,
            success,
            psi_max: None,
            gated: [false; 3],
            entropy_pre: None,
            entropy_post: None,
        };
        let text = render_history(&[record(Skill::Skewer, false), record(Skill::Scoop, true)], &belief);
        assert_eq!(
            text,
            "Steak:\nshape: block\nsize: bite-sized\nsoftness: 3\nmoisture: 3\nviscosity: 2\nskewer: failure\nscoop: success"
        );
    }

    #[test]
    fn answer_parsing() {
        assert_eq!(parse_skill_answer("Reasoning: firm. Answer: skewer").unwrap(), Skill::Skewer);
        assert_eq!(parse_skill_answer("Answer: 'scoop'.").unwrap(), Skill::Scoop);
        assert_eq!(parse_skill_answer("Answer: cut\nAnswer: push").unwrap(), Skill::Push);
        assert!(parse_skill_answer("I would skewer").is_err());
        assert!(parse_skill_answer("Answer: spoon").is_err());
    }
}
