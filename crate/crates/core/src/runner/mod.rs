//! Episode loop, policies, metrics and experiments.

mod category;
mod experiment;
mod ledger;
mod metrics;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use category::{CategoryTable, CATEGORY_TABLE_SCHEMA_VERSION};
pub use experiment::{
    run_experiment, run_id, EstimatorSettings, ExperimentConfig, ExperimentInputs, ExperimentResult,
    EXPERIMENT_SCHEMA_VERSION,
};
pub use ledger::{read_ledger, write_ledger, LEDGER_COLUMNS};
pub use metrics::{bootstrap_compare, compute_metrics, Aggregate, MetricsReport, PlateMetrics};

use crate::calibration::LikelihoodModel;
use crate::error::{Error, Result};
use crate::estimator::{default_theta_th, transfer_prior, update_belief, Belief, ChannelMask, PriorTable, DEFAULT_BLEND_W};
use crate::model::{advance_clock, ItemId, PlateState, Skill, Tool};
use crate::planner::{score_skills, select_skill, PlannerParams, SuccessTable};
use crate::rng;
use crate::sim::{execute_skill, SimModel};

pub const DEFAULT_BUDGET: u32 = 3;

/// Stream tags for seeds derived from a cell seed.
pub(crate) const PLATE_STREAM: u64 = 0x504C_4154;
pub(crate) const POLICY_STREAM: u64 = 0x504F_4C49;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Savor,
    SavorNoCalibration,
    VisionOnly,
    HapticOnly,
    CategoryBaseline,
    Random,
}

impl Policy {
    pub const ALL: [Policy; 6] = [
        Policy::Savor,
        Policy::SavorNoCalibration,
        Policy::VisionOnly,
        Policy::HapticOnly,
        Policy::CategoryBaseline,
        Policy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Savor => "savor",
            Policy::SavorNoCalibration => "savor-no-calibration",
            Policy::VisionOnly => "vision-only",
            Policy::HapticOnly => "haptic-only",
            Policy::CategoryBaseline => "category-baseline",
            Policy::Random => "random",
        }
    }

    /// Maintains a property belief refined from observations.
    pub fn uses_belief(self) -> bool {
        matches!(self, Policy::Savor | Policy::SavorNoCalibration | Policy::VisionOnly | Policy::HapticOnly)
    }

    /// Scores skills from the calibration dataset.
    pub fn uses_calibration(self) -> bool {
        matches!(self, Policy::Savor | Policy::VisionOnly | Policy::HapticOnly)
    }

    pub fn mask(self) -> ChannelMask {
        match self {
            Policy::VisionOnly => ChannelMask::vision_only(),
            Policy::HapticOnly => ChannelMask::haptic_only(),
            _ => ChannelMask::ALL,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

/// Tunable estimator and planner parameters shared by the belief policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyParams {
    pub theta_th: f64,
    pub blend_w: f64,
    pub theta_feas: f64,
    pub tau: f64,
    pub alpha: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        let planner = PlannerParams::default();
        Self {
            theta_th: default_theta_th(),
            blend_w: DEFAULT_BLEND_W,
            theta_feas: planner.theta_feas,
            tau: planner.tau,
            alpha: planner.alpha,
        }
    }
}

impl PolicyParams {
    pub fn planner(&self) -> PlannerParams {
        PlannerParams { theta_feas: self.theta_feas, tau: self.tau, alpha: self.alpha }
    }

    /// Sets one parameter by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "theta_th" => self.theta_th = value,
            "blend_w" => self.blend_w = value,
            "theta_feas" => self.theta_feas = value,
            "tau" => self.tau = value,
            "alpha" => self.alpha = value,
            other => return Err(Error::Argument(format!("unknown parameter `{other}`"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub plate_id: String,
    pub item_id: ItemId,
    pub label: String,
    /// 1-based per item.
    pub attempt_index: u32,
    pub skill: Skill,
    pub success: bool,
    /// Largest log probability of each property row, when refined.
    pub psi_max: Option<[f64; 3]>,
    /// Which properties passed the confidence gate.
    pub gated: [bool; 3],
    pub entropy_pre: Option<f64>,
    pub entropy_post: Option<f64>,
}

impl AttemptRecord {
    pub fn acquired(&self) -> bool {
        self.success && self.skill.is_acquisition()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalStatus {
    Acquired,
    RemovedFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub item_id: ItemId,
    pub label: String,
    pub status: TerminalStatus,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub run_id: String,
    pub policy: Policy,
    pub plate_id: String,
    pub seed_index: u32,
    /// Cell seed all randomness of this episode derives from.
    pub seed: u64,
    pub config_digest: String,
    pub plate_digest: String,
    pub attempts: Vec<AttemptRecord>,
    pub items: Vec<ItemOutcome>,
}

impl EpisodeLog {
    pub fn acquired(&self) -> usize {
        self.items.iter().filter(|i| i.status == TerminalStatus::Acquired).count()
    }

    /// Items acquired within the first `k` attempts.
    pub fn acquired_within(&self, k: u32) -> usize {
        self.attempts.iter().filter(|a| a.acquired() && a.attempt_index <= k).count()
    }
}

/// Shared, read-only inputs of an episode.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeContext<'a> {
    pub sim: &'a SimModel,
    pub tool: &'a Tool,
    pub priors: &'a PriorTable,
    pub category: &'a CategoryTable,
    /// Needed by the belief policies.
    pub likelihood: Option<&'a LikelihoodModel>,
    /// Needed by the calibrated policies.
    pub success: Option<&'a SuccessTable>,
    pub params: PolicyParams,
    pub budget: u32,
}

/// Identifies one episode for logging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeTag {
    pub run_id: String,
    pub seed_index: u32,
    pub config_digest: String,
}

/// Runs one plate to completion under `policy`.
///
/// The outcome draw and observation noise of attempt `a` of item `i` with
/// skill `k` come from a stream keyed by `(seed, i, a, k)`, so two policies
/// choosing the same skill at the same point see the same outcome.
pub fn run_episode(ctx: &EpisodeContext, plate: &PlateState, policy: Policy, seed: u64, tag: &EpisodeTag) -> Result<EpisodeLog> {
    if ctx.budget == 0 {
        return Err(Error::Argument("attempt budget must be at least 1".into()));
    }
    let likelihood = if policy.uses_belief() {
        Some(ctx.likelihood.ok_or_else(|| Error::Config(format!("policy {policy} needs fitted likelihoods")))?)
    } else {
        None
    };
    let uninformed = SuccessTable::uninformed();
    let success = if policy.uses_calibration() {
        ctx.success.ok_or_else(|| Error::Config(format!("policy {policy} needs a calibration dataset")))?
    } else {
        &uninformed
    };
    let plate_digest = plate.digest();
    let mut plate = plate.clone();
    let mut belief = Belief::default();
    let mut attempts: Vec<AttemptRecord> = Vec::new();
    let mut items = Vec::with_capacity(plate.items.len());
    let mut policy_rng = rng::stream(rng::derive_seed(seed, POLICY_STREAM, 0), 0);
    let order: Vec<ItemId> = plate.items.iter().map(|i| i.item_id).collect();

    for id in order {
        let label = plate.item(id)?.label.clone();
        if policy.uses_belief() {
            belief = transfer_prior(&belief, id, &label, &attempts, ctx.priors, ctx.params.blend_w)?;
        }
        let mut status = TerminalStatus::RemovedFailed;
        let mut used = 0;
        for attempt_index in 1..=ctx.budget {
            let current = plate.item(id)?.clone();
            if policy.uses_belief() {
                let entry = belief.get(id)?.clone().with_geometry(
                    current.true_props.shape,
                    current.observed_size(),
                    current.dippable,
                );
                belief = belief.with_entry(id, entry);
            }
            let skill = match policy {
                Policy::CategoryBaseline => ctx.category.skill_for(&label, attempt_index),
                Policy::Random => *Skill::ALL.choose(&mut policy_rng).expect("skill library is non-empty"),
                _ => {
                    let scores = score_skills(success, belief.get(id)?, ctx.params.theta_feas);
                    select_skill(&scores, &current, &attempts)?
                }
            };
            let entropy_pre = policy.uses_belief().then(|| belief.get(id).map(|e| e.entropy())).transpose()?;
            let mut stream = rng::stream(rng::derive_seed(seed, id.0 as u64, attempt_index as u64), skill.index() as u64);
            let (outcome, obs, next) = execute_skill(&mut stream, ctx.sim, ctx.tool, skill, &current, plate.clock, attempt_index)?;

            let mut record = AttemptRecord {
                plate_id: plate.plate_id.clone(),
                item_id: id,
                label: label.clone(),
                attempt_index,
                skill,
                success: outcome.success,
                psi_max: None,
                gated: [false; 3],
                entropy_pre,
                entropy_post: None,
            };
            if let Some(lik) = likelihood {
                let update = update_belief(&belief, id, &obs, lik, ctx.params.theta_th, policy.mask())?;
                belief = update.belief;
                record.psi_max = Some(update.logits.row_maxima());
                record.gated = update.updated;
                record.entropy_post = Some(belief.get(id)?.entropy());
            }
            attempts.push(record);
            plate = advance_clock(&plate.with_item(next)?);
            used = attempt_index;
            if outcome.acquired() {
                status = TerminalStatus::Acquired;
                break;
            }
        }
        if status == TerminalStatus::RemovedFailed {
            let removed = plate.item(id)?.clone().mark_removed()?;
            plate = plate.with_item(removed)?;
        }
        items.push(ItemOutcome { item_id: id, label, status, attempts: used });
    }

    Ok(EpisodeLog {
        run_id: tag.run_id.clone(),
        policy,
        plate_id: plate.plate_id.clone(),
        seed_index: tag.seed_index,
        seed,
        config_digest: tag.config_digest.clone(),
        plate_digest,
        attempts,
        items,
    })
}
