//! Skill selection from calibration evidence and the current belief.
//!
//! Each acquisition skill is scored by its kernel-smoothed calibration
//! success rate, averaged over the belief's 125 level triples. The best
//! feasible skill wins; when none is feasible a pre-acquisition skill
//! prepares the item.

mod prompt;

use serde::{Deserialize, Serialize};

pub use prompt::{build_planner_prompt, parse_skill_answer, render_history, PlannerContext};

use crate::calibration::CalibrationDataset;
use crate::error::{Error, Result};
use crate::estimator::BeliefEntry;
use crate::model::{FoodItemState, PropertyLevel, PropertyVector, Shape, Size, Skill, LEVELS};
use crate::runner::AttemptRecord;

pub const DEFAULT_THETA_FEAS: f64 = 0.35;
pub const DEFAULT_TAU: f64 = 1.0;
pub const DEFAULT_ALPHA: f64 = 1.0;

const TRIPLES: usize = LEVELS * LEVELS * LEVELS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    pub theta_feas: f64,
    pub tau: f64,
    pub alpha: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self { theta_feas: DEFAULT_THETA_FEAS, tau: DEFAULT_TAU, alpha: DEFAULT_ALPHA }
    }
}

/// Kernel-smoothed success rate of `skill` at `props`:
/// `(sum k * successes + alpha) / (sum k * trials + 2 alpha)` with
/// `k = exp(-L1 level distance / tau)` over calibration records.
pub fn calibration_success_estimate(
    dataset: &CalibrationDataset,
    skill: Skill,
    props: &PropertyVector,
    tau: f64,
    alpha: f64,
) -> Result<f64> {
    estimate_at(dataset, skill, props.level_indices(), tau, alpha)
}

fn estimate_at(dataset: &CalibrationDataset, skill: Skill, at: [usize; 3], tau: f64, alpha: f64) -> Result<f64> {
    if !(tau > 0.0) || !(alpha > 0.0) {
        return Err(Error::Argument(format!("tau ({tau}) and alpha ({alpha}) must be positive")));
    }
    let mut succ = 0.0;
    let mut trials = 0.0;
    let mut covered = false;
    for (record, tally) in dataset.records_for(skill) {
        covered = true;
        let d: usize = record.props.level_indices().iter().zip(at).map(|(a, b)| a.abs_diff(b)).sum();
        let k = (-(d as f64) / tau).exp();
        succ += k * tally.successes as f64;
        trials += k * tally.trials as f64;
    }
    if !covered {
        return Err(Error::Coverage(skill.to_string()));
    }
    Ok((succ + alpha) / (trials + 2.0 * alpha))
}

fn triple_index(s: usize, m: usize, v: usize) -> usize {
    (s * LEVELS + m) * LEVELS + v
}

/// Success estimates of every acquisition skill at every level triple.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessTable {
    values: [[f64; TRIPLES]; Skill::ACQUISITION.len()],
}

impl SuccessTable {
    pub fn from_calibration(dataset: &CalibrationDataset, tau: f64, alpha: f64) -> Result<Self> {
        let mut values = [[0.0; TRIPLES]; Skill::ACQUISITION.len()];
        for (row, skill) in values.iter_mut().zip(Skill::ACQUISITION) {
            for s in 0..LEVELS {
                for m in 0..LEVELS {
                    for v in 0..LEVELS {
                        row[triple_index(s, m, v)] = estimate_at(dataset, skill, [s, m, v], tau, alpha)?;
                    }
                }
            }
        }
        Ok(Self { values })
    }

    /// No calibration knowledge: every skill is a coin flip everywhere.
    pub fn uninformed() -> Self {
        Self { values: [[0.5; TRIPLES]; Skill::ACQUISITION.len()] }
    }

    pub fn get(&self, skill: Skill, levels: [PropertyLevel; 3]) -> f64 {
        let [s, m, v] = levels.map(|l| l.index());
        self.values[skill.index()][triple_index(s, m, v)]
    }

    /// Expected success of `skill` under the belief's property distributions.
    pub fn expected(&self, skill: Skill, entry: &BeliefEntry) -> f64 {
        let (ps, pm, pv) = (entry.softness.probs(), entry.moisture.probs(), entry.viscosity.probs());
        let row = &self.values[skill.index()];
        let mut total = 0.0;
        for s in 0..LEVELS {
            for m in 0..LEVELS {
                for v in 0..LEVELS {
                    total += ps[s] * pm[m] * pv[v] * row[triple_index(s, m, v)];
                }
            }
        }
        total.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillScore {
    pub skill: Skill,
    pub probability: f64,
    pub feasible: bool,
}

/// Whether shape, size and sauce availability permit `skill` at all.
pub fn geometry_permits(skill: Skill, shape: Shape, size: Size, dippable: bool) -> bool {
    match skill {
        Skill::Skewer | Skill::Scoop => size != Size::Large,
        Skill::Twirl => shape == Shape::Noodle,
        Skill::Dip => dippable,
        Skill::Push | Skill::Cut => true,
    }
}

/// Scores every acquisition skill, in tie-break order.
pub fn score_skills(table: &SuccessTable, entry: &BeliefEntry, theta_feas: f64) -> Vec<SkillScore> {
    Skill::ACQUISITION
        .iter()
        .map(|&skill| {
            let probability = table.expected(skill, entry);
            let feasible =
                probability >= theta_feas && geometry_permits(skill, entry.shape, entry.size, entry.dippable);
            SkillScore { skill, probability, feasible }
        })
        .collect()
}

fn argmax<'a>(scores: impl Iterator<Item = &'a SkillScore>) -> Option<Skill> {
    let mut best: Option<&SkillScore> = None;
    for score in scores {
        if best.is_none_or(|b| score.probability > b.probability) {
            best = Some(score);
        }
    }
    best.map(|s| s.skill)
}

/// Best feasible acquisition skill, else cut (large, never cut before),
/// else push (not braced), else the best acquisition skill regardless.
pub fn select_skill(scores: &[SkillScore], target: &FoodItemState, history: &[AttemptRecord]) -> Result<Skill> {
    let ordered: Vec<&SkillScore> = Skill::ACQUISITION
        .iter()
        .map(|skill| {
            scores
                .iter()
                .find(|s| s.skill == *skill)
                .ok_or_else(|| Error::Argument(format!("no score for acquisition skill {skill}")))
        })
        .collect::<Result<_>>()?;
    if let Some(skill) = argmax(ordered.iter().copied().filter(|s| s.feasible)) {
        return Ok(skill);
    }
    let cut_tried = target.flags.cut_applied
        || history.iter().any(|r| r.item_id == target.item_id && r.skill == Skill::Cut);
    if target.observed_size() == Size::Large && !cut_tried {
        return Ok(Skill::Cut);
    }
    if !target.flags.braced {
        return Ok(Skill::Push);
    }
    Ok(argmax(ordered.into_iter()).expect("acquisition skills are non-empty"))
}
