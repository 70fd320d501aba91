//! Ground-truth skill outcome model.
//!
//! Each `(tool, skill)` pair has an additive logistic model over per-level
//! weights for softness, moisture and viscosity plus size and flag terms.
//! Entries with `tool = "any"` apply to every tool; an entry naming a tool
//! takes precedence for that tool.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ItemFlags, PropertyVector, Shape, Size, Skill, Tool, LEVELS};

pub const ANY_TOOL: &str = "any";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillCoefficients {
    pub skill: Skill,
    #[serde(default = "any_tool")]
    pub tool: String,
    #[serde(default)]
    pub intercept: f64,
    #[serde(default)]
    pub softness: [f64; LEVELS],
    #[serde(default)]
    pub moisture: [f64; LEVELS],
    #[serde(default)]
    pub viscosity: [f64; LEVELS],
    /// Added when the item is large.
    #[serde(default)]
    pub large: f64,
    /// Added once the item has been cut.
    #[serde(default)]
    pub cut_applied: f64,
    /// Execution is infeasible (always fails) unless the item has this shape.
    #[serde(default)]
    pub requires_shape: Option<Shape>,
    /// Execution is infeasible unless a dipping sauce accompanies the item.
    #[serde(default)]
    pub requires_dippable: bool,
}

fn any_tool() -> String {
    ANY_TOOL.to_string()
}

impl SkillCoefficients {
    fn logit(&self, props: &PropertyVector, flags: &ItemFlags) -> f64 {
        let [s, m, v] = props.level_indices();
        let mut z = self.intercept + self.softness[s] + self.moisture[m] + self.viscosity[v];
        if props.size == Size::Large {
            z += self.large;
        }
        if flags.cut_applied {
            z += self.cut_applied;
        }
        z
    }

    fn is_finite(&self) -> bool {
        [self.intercept, self.large, self.cut_applied]
            .iter()
            .chain(&self.softness)
            .chain(&self.moisture)
            .chain(&self.viscosity)
            .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthOutcomeModel {
    /// Logit bonus for skewer/scoop on a braced item.
    #[serde(default = "default_brace_bonus")]
    pub brace_bonus: f64,
    /// When set, every skill succeeds with this probability and no
    /// feasibility gates apply.
    #[serde(default)]
    pub fixed_probability: Option<f64>,
    #[serde(default, rename = "skill")]
    pub entries: Vec<SkillCoefficients>,
}

fn default_brace_bonus() -> f64 {
    0.75
}

impl GroundTruthOutcomeModel {
    /// Degenerate model where every execution succeeds with probability `p`.
    pub fn forced(p: f64) -> Self {
        Self { brace_bonus: default_brace_bonus(), fixed_probability: Some(p.clamp(0.0, 1.0)), entries: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.fixed_probability {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Model(format!("fixed_probability {p} outside [0, 1]")));
            }
            return Ok(());
        }
        if !self.brace_bonus.is_finite() {
            return Err(Error::Model("brace_bonus must be finite".into()));
        }
        for entry in &self.entries {
            if !entry.is_finite() {
                return Err(Error::Model(format!("non-finite coefficient for {}", entry.skill)));
            }
        }
        for skill in Skill::ACQUISITION {
            if !self.entries.iter().any(|e| e.skill == skill && e.tool == ANY_TOOL) {
                return Err(Error::Model(format!("no `any`-tool coefficients for acquisition skill {skill}")));
            }
        }
        Ok(())
    }

    fn entry(&self, tool: &str, skill: Skill) -> Option<&SkillCoefficients> {
        self.entries
            .iter()
            .find(|e| e.skill == skill && e.tool == tool)
            .or_else(|| self.entries.iter().find(|e| e.skill == skill && e.tool == ANY_TOOL))
    }

    /// Whether `skill` can physically be carried out on an item.
    pub fn executable(&self, tool: &Tool, skill: Skill, props: &PropertyVector, dippable: bool) -> bool {
        if self.fixed_probability.is_some() {
            return true;
        }
        match self.entry(&tool.name, skill) {
            Some(e) => {
                e.requires_shape.is_none_or(|shape| shape == props.shape) && (!e.requires_dippable || dippable)
            }
            None => true,
        }
    }

    /// Probability that `skill` succeeds. For push and cut this is the
    /// probability that the manipulation takes effect.
    pub fn success_probability(&self, tool: &Tool, skill: Skill, props: &PropertyVector, flags: &ItemFlags) -> f64 {
        if let Some(p) = self.fixed_probability {
            return p;
        }
        let Some(entry) = self.entry(&tool.name, skill) else {
            // Manipulations without coefficients always take effect.
            return if skill.is_acquisition() { 0.0 } else { 1.0 };
        };
        let mut z = entry.logit(props, flags);
        match skill {
            Skill::Skewer | Skill::Cut => z += tool.hardness_offset,
            Skill::Scoop => z += tool.scoop_capacity,
            _ => {}
        }
        if flags.braced && matches!(skill, Skill::Skewer | Skill::Scoop) {
            z += self.brace_bonus;
        }
        sigmoid(z)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Free-function form of [`GroundTruthOutcomeModel::success_probability`].
pub fn success_probability(
    model: &GroundTruthOutcomeModel,
    tool: &Tool,
    skill: Skill,
    props: &PropertyVector,
    flags: &ItemFlags,
) -> f64 {
    model.success_probability(tool, skill, props, flags)
}
