use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FoodItemState, Skill, Tool};
use crate::sim::observation::{synth_observations, ObservationSeries};
use crate::sim::SimModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    /// For push and cut: the manipulation took effect. Never an acquisition.
    pub success: bool,
    pub attempt_index: u32,
    pub skill: Skill,
}

impl Outcome {
    pub fn acquired(&self) -> bool {
        self.success && self.skill.is_acquisition()
    }
}

/// Executes `skill` on `item`, sampling the outcome and the observation.
pub fn execute_skill<R: Rng + ?Sized>(
    rng: &mut R,
    model: &SimModel,
    tool: &Tool,
    skill: Skill,
    item: &FoodItemState,
    clock: u32,
    attempt_index: u32,
) -> Result<(Outcome, ObservationSeries, FoodItemState)> {
    let draw: f64 = rng.gen();
    execute_skill_with_draw(draw, rng, model, tool, skill, item, clock, attempt_index)
}

/// Like [`execute_skill`] but with the outcome uniform `draw` in `[0, 1)`
/// supplied by the caller; `rng` then only feeds observation noise.
#[allow(clippy::too_many_arguments)]
pub fn execute_skill_with_draw<R: Rng + ?Sized>(
    draw: f64,
    rng: &mut R,
    model: &SimModel,
    tool: &Tool,
    skill: Skill,
    item: &FoodItemState,
    clock: u32,
    attempt_index: u32,
) -> Result<(Outcome, ObservationSeries, FoodItemState)> {
    if item.flags.is_terminal() {
        return Err(Error::State(format!("item {} is no longer on the plate", item.item_id)));
    }
    let props = item.effective_properties(clock)?;
    let p = if model.outcome.executable(tool, skill, &props, item.dippable) {
        model.outcome.success_probability(tool, skill, &props, &item.flags)
    } else {
        0.0
    };
    let success = draw < p;
    let outcome = Outcome { success, attempt_index, skill };

    let mut next = item.clone();
    if success {
        match skill {
            Skill::Cut => next.flags.cut_applied = true,
            Skill::Push => next.flags.braced = true,
            _ => next = next.mark_acquired()?,
        }
    }
    let observation = synth_observations(rng, &model.observation, tool, skill, &props, &outcome);
    Ok((outcome, observation, next))
}
