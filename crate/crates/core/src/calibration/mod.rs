//! Offline tool calibration.
//!
//! Every skill in the library is executed a fixed number of times on a
//! small set of reference foods. The resulting success tallies are the
//! tool's affordance description; the recorded rollouts also train the
//! observation likelihoods used by the estimator.

mod likelihood;

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use likelihood::{fit_likelihoods, Gaussian, LikelihoodCell, LikelihoodModel, DEFAULT_STD_FLOOR};

use crate::error::{Error, Result};
use crate::model::{
    DriftParams, FoodItemState, FoodRegistry, ItemFlags, ItemId, PropertyLevel, PropertyVector, Shape, Size, Skill,
    Tool,
};
use crate::rng;
use crate::sim::{execute_skill_with_draw, ObservationSeries, Outcome, SimModel};

pub const CALIBRATION_SCHEMA_VERSION: u32 = 1;

/// Reference foods used when none are given.
pub const DEFAULT_CALIBRATION_FOODS: [&str; 5] = ["nuts", "cheese", "raw_carrot", "cooked_carrot", "soft_tofu"];
pub const DEFAULT_TRIALS_PER_SKILL: u32 = 5;

/// Skills listed in the natural-language summary, in order.
pub const SUMMARY_SKILLS: [Skill; 5] = [Skill::Skewer, Skill::Scoop, Skill::Cut, Skill::Push, Skill::Dip];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SkillTally {
    pub successes: u32,
    pub trials: u32,
}

impl SkillTally {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub food: String,
    pub display_name: String,
    /// Annotated properties of the calibration item.
    pub props: PropertyVector,
    pub tallies: BTreeMap<Skill, SkillTally>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub food: String,
    pub skill: Skill,
    pub trial: u32,
    pub props: PropertyVector,
    pub outcome: Outcome,
    pub observation: ObservationSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDataset {
    pub schema_version: u32,
    pub tool: String,
    pub records: Vec<CalibrationRecord>,
    /// Sorted by food (record order), skill, trial.
    pub rollouts: Vec<Rollout>,
}

impl CalibrationDataset {
    pub fn records_for(&self, skill: Skill) -> impl Iterator<Item = (&CalibrationRecord, SkillTally)> {
        self.records.iter().filter_map(move |r| r.tallies.get(&skill).map(|t| (r, *t)))
    }

    pub fn record(&self, food: &str) -> Option<&CalibrationRecord> {
        self.records.iter().find(|r| r.food == food)
    }

    /// Multiplies every tally by `factor`.
    pub fn scaled(&self, factor: u32) -> Self {
        let mut out = self.clone();
        for record in &mut out.records {
            for tally in record.tallies.values_mut() {
                tally.successes *= factor;
                tally.trials *= factor;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dataset: CalibrationDataset = serde_json::from_str(text)?;
        if dataset.schema_version != CALIBRATION_SCHEMA_VERSION {
            return Err(Error::Schema {
                document: "calibration dataset".into(),
                found: dataset.schema_version,
                expected: CALIBRATION_SCHEMA_VERSION,
            });
        }
        for record in &dataset.records {
            for (skill, tally) in &record.tallies {
                if tally.successes > tally.trials {
                    return Err(Error::Parse(format!(
                        "{} / {skill}: {} successes exceed {} trials",
                        record.food, tally.successes, tally.trials
                    )));
                }
            }
        }
        Ok(dataset)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// How the outcome draws of one `(food, skill)` block are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialSampling {
    /// One independent uniform per trial.
    Independent,
    /// Trial `i` of `n` draws its uniform from stratum `pi(i)` of `n`
    /// equal strata, `pi` a random permutation.
    #[default]
    Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProtocol {
    pub foods: Vec<String>,
    pub trials_per_skill: u32,
    #[serde(default)]
    pub sampling: TrialSampling,
}

impl Default for CalibrationProtocol {
    fn default() -> Self {
        Self {
            foods: DEFAULT_CALIBRATION_FOODS.iter().map(|s| s.to_string()).collect(),
            trials_per_skill: DEFAULT_TRIALS_PER_SKILL,
            sampling: TrialSampling::default(),
        }
    }
}

/// Item as it sits on the calibration station: annotated properties, no
/// drift, and a sauce cup within reach.
fn station_item(label: &str, props: PropertyVector) -> FoodItemState {
    FoodItemState {
        item_id: ItemId(0),
        label: label.to_string(),
        position: [0.0, 0.0],
        true_props: props,
        drift: DriftParams::default(),
        flags: ItemFlags::default(),
        dippable: true,
    }
}

fn block_draws<R: Rng>(rng: &mut R, trials: u32, sampling: TrialSampling) -> Vec<f64> {
    match sampling {
        TrialSampling::Independent => (0..trials).map(|_| rng.gen::<f64>()).collect(),
        TrialSampling::Stratified => {
            let mut strata: Vec<u32> = (0..trials).collect();
            strata.shuffle(rng);
            strata.into_iter().map(|k| (k as f64 + rng.gen::<f64>()) / trials as f64).collect()
        }
    }
}

fn run_blocks(
    seed: u64,
    sim: &SimModel,
    tool: &Tool,
    items: &[(String, String, PropertyVector)],
    trials_per_skill: u32,
    sampling: TrialSampling,
) -> Result<CalibrationDataset> {
    let mut records = Vec::with_capacity(items.len());
    let mut rollouts = Vec::with_capacity(items.len() * Skill::ALL.len() * trials_per_skill as usize);
    for (food_index, (label, display_name, props)) in items.iter().enumerate() {
        let item = station_item(label, *props);
        let mut tallies = BTreeMap::new();
        for skill in Skill::ALL {
            let mut stream = rng::stream(seed, (food_index * Skill::ALL.len() + skill.index()) as u64);
            let draws = block_draws(&mut stream, trials_per_skill, sampling);
            let mut tally = SkillTally { successes: 0, trials: trials_per_skill };
            for (trial, draw) in draws.into_iter().enumerate() {
                let (outcome, observation, _) =
                    execute_skill_with_draw(draw, &mut stream, sim, tool, skill, &item, 0, trial as u32 + 1)?;
                tally.successes += outcome.success as u32;
                rollouts.push(Rollout { food: label.clone(), skill, trial: trial as u32, props: *props, outcome, observation });
            }
            tallies.insert(skill, tally);
        }
        records.push(CalibrationRecord { food: label.clone(), display_name: display_name.clone(), props: *props, tallies });
    }
    Ok(CalibrationDataset { schema_version: CALIBRATION_SCHEMA_VERSION, tool: tool.name.clone(), records, rollouts })
}

/// Runs every skill `protocol.trials_per_skill` times on each calibration food.
pub fn run_calibration(
    seed: u64,
    sim: &SimModel,
    registry: &FoodRegistry,
    tool: &Tool,
    protocol: &CalibrationProtocol,
) -> Result<CalibrationDataset> {
    if protocol.foods.is_empty() {
        return Err(Error::Argument("calibration needs at least one food".into()));
    }
    if protocol.trials_per_skill == 0 {
        return Err(Error::Argument("trials_per_skill must be at least 1".into()));
    }
    let items = protocol
        .foods
        .iter()
        .map(|label| {
            let entry = registry.food(label)?;
            Ok((label.clone(), registry.display_name(label), entry.mode_props()))
        })
        .collect::<Result<Vec<_>>>()?;
    run_blocks(seed, sim, tool, &items, protocol.trials_per_skill, protocol.sampling)
}

/// Interaction corpus over every `(softness, moisture, viscosity)` triple,
/// used to train observation likelihoods with decorrelated properties.
pub fn run_property_sweep(seed: u64, sim: &SimModel, tool: &Tool, trials_per_skill: u32) -> Result<CalibrationDataset> {
    if trials_per_skill == 0 {
        return Err(Error::Argument("trials_per_skill must be at least 1".into()));
    }
    let mut items = Vec::with_capacity(125);
    for s in PropertyLevel::all() {
        for m in PropertyLevel::all() {
            for v in PropertyLevel::all() {
                let label = format!("sweep-s{s}-m{m}-v{v}");
                let props = PropertyVector { shape: Shape::Cubic, size: Size::BiteSized, softness: s, moisture: m, viscosity: v };
                items.push((label.clone(), label, props));
            }
        }
    }
    run_blocks(seed, sim, tool, &items, trials_per_skill, TrialSampling::Independent)
}

/// Natural-language tool summary for planner prompts.
pub fn render_summary(dataset: &CalibrationDataset) -> String {
    let mut out = format!(
        "The robot interacts with various food items using a {}. We summarize the history as follows:\n",
        dataset.tool.replace('_', " ")
    );
    let blocks: Vec<String> = dataset
        .records
        .iter()
        .map(|record| {
            let rates = SUMMARY_SKILLS
                .iter()
                .map(|skill| {
                    let t = record.tallies.get(skill).copied().unwrap_or_default();
                    format!("{} {}/{}", skill.title(), t.successes, t.trials)
                })
                .collect::<Vec<_>>()
                .join(", ");
            format!(
                "Food Item: {}\n{}\nSkill with Success Rate: {}\n",
                record.display_name,
                record.props.summary_line(),
                rates
            )
        })
        .collect();
    out.push_str(&blocks.join("\n"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::GroundTruthOutcomeModel;

    fn plastic() -> Tool {
        FoodRegistry::default().tool("plastic_fork").unwrap().clone()
    }

    #[test]
    fn default_protocol_stores_150_rollouts() {
        let ds = run_calibration(7, &SimModel::default(), &FoodRegistry::default(), &plastic(), &CalibrationProtocol::default())
            .unwrap();
        assert_eq!(ds.records.len(), 5);
        assert_eq!(ds.rollouts.len(), 150);
        for record in &ds.records {
            assert_eq!(record.tallies.len(), Skill::ALL.len());
        }
    }

    #[test]
    fn zero_trials_and_empty_foods_rejected() {
        let reg = FoodRegistry::default();
        let mut protocol = CalibrationProtocol { trials_per_skill: 0, ..Default::default() };
        assert!(matches!(run_calibration(1, &SimModel::default(), &reg, &plastic(), &protocol), Err(Error::Argument(_))));
        protocol.trials_per_skill = 5;
        protocol.foods.clear();
        assert!(matches!(run_calibration(1, &SimModel::default(), &reg, &plastic(), &protocol), Err(Error::Argument(_))));
    }

    #[test]
    fn unknown_food_rejected() {
        let protocol = CalibrationProtocol { foods: vec!["ambrosia".into()], ..Default::default() };
        assert!(matches!(
            run_calibration(1, &SimModel::default(), &FoodRegistry::default(), &plastic(), &protocol),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn forced_success_fills_every_tally() {
        let sim = SimModel { outcome: GroundTruthOutcomeModel::forced(1.0), ..SimModel::default() };
        for sampling in [TrialSampling::Independent, TrialSampling::Stratified] {
            let protocol = CalibrationProtocol { sampling, ..Default::default() };
            let ds = run_calibration(3, &sim, &FoodRegistry::default(), &plastic(), &protocol).unwrap();
            for record in &ds.records {
                for tally in record.tallies.values() {
                    assert_eq!((tally.successes, tally.trials), (5, 5));
                }
            }
        }
    }

    #[test]
    fn tallies_match_rollouts() {
        let protocol = CalibrationProtocol { sampling: TrialSampling::Independent, ..Default::default() };
        let ds = run_calibration(11, &SimModel::default(), &FoodRegistry::default(), &plastic(), &protocol).unwrap();
        for record in &ds.records {
            for (skill, tally) in &record.tallies {
                let count = ds.rollouts.iter().filter(|r| r.food == record.food && r.skill == *skill && r.outcome.success).count();
                assert_eq!(count as u32, tally.successes);
            }
        }
    }

    #[test]
    fn stratified_block_uses_each_stratum_once() {
        let mut stream = rng::stream(5, 0);
        let mut draws = block_draws(&mut stream, 5, TrialSampling::Stratified);
        draws.sort_by(f64::total_cmp);
        for (k, d) in draws.iter().enumerate() {
            assert!(*d >= k as f64 / 5.0 && *d < (k + 1) as f64 / 5.0);
        }
    }

    fn nuts_only() -> CalibrationDataset {
        let props = FoodRegistry::default().food("nuts").unwrap().mode_props();
        let tallies = [
            (Skill::Skewer, 0),
            (Skill::Scoop, 3),
            (Skill::Twirl, 0),
            (Skill::Dip, 5),
            (Skill::Push, 5),
            (Skill::Cut, 0),
        ]
        .into_iter()
        .map(|(s, k)| (s, SkillTally { successes: k, trials: 5 }))
        .collect();
        CalibrationDataset {
            schema_version: CALIBRATION_SCHEMA_VERSION,
            tool: "plastic_fork".into(),
            records: vec![CalibrationRecord { food: "nuts".into(), display_name: "Nuts".into(), props, tallies }],
            rollouts: Vec::new(),
        }
    }

    #[test]
    fn summary_single_block_format() {
        let text = render_summary(&nuts_only());
        assert_eq!(
            text,
            "The robot interacts with various food items using a plastic fork. We summarize the history as follows:\n\
             Food Item: Nuts\n\
             Shape: Oval, Size: Bite-sized, Softness: 1, Moisture: 1, Viscosity: 2\n\
             Skill with Success Rate: Skewer 0/5, Scoop 3/5, Cut 0/5, Push 5/5, Dip 5/5\n"
        );
        assert!(!text.ends_with("\n\n"));
    }

    #[test]
    fn summary_is_byte_stable_and_separates_blocks() {
        let ds = run_calibration(2, &SimModel::default(), &FoodRegistry::default(), &plastic(), &CalibrationProtocol::default())
            .unwrap();
        let a = render_summary(&ds);
        assert_eq!(a, render_summary(&ds));
        assert_eq!(a.matches("Food Item: ").count(), 5);
        assert_eq!(a.matches("\n\n").count(), 4);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let ds = nuts_only();
        assert_eq!(CalibrationDataset::from_json(&ds.to_json().unwrap()).unwrap(), ds);
        let mut bad = ds.clone();
        bad.records[0].tallies.get_mut(&Skill::Dip).unwrap().successes = 6;
        assert!(CalibrationDataset::from_json(&bad.to_json().unwrap()).is_err());
    }

    #[test]
    fn sweep_covers_every_triple() {
        let ds = run_property_sweep(1, &SimModel::default(), &plastic(), 1).unwrap();
        assert_eq!(ds.records.len(), 125);
        assert_eq!(ds.rollouts.len(), 125 * 6);
    }
}
