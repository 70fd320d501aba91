use std::collections::BTreeSet;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{fit_likelihoods, run_property_sweep, CalibrationDataset, LikelihoodModel, DEFAULT_STD_FLOOR};
use crate::error::{Error, Result};
use crate::estimator::PriorTable;
use crate::model::{make_plate, FoodRegistry, PlateSpec};
use crate::planner::SuccessTable;
use crate::rng;
use crate::runner::{
    compute_metrics, run_episode, CategoryTable, EpisodeContext, EpisodeLog, EpisodeTag, MetricsReport, Policy,
    PolicyParams, DEFAULT_BUDGET, PLATE_STREAM,
};
use crate::sim::SimModel;

pub const EXPERIMENT_SCHEMA_VERSION: u32 = 1;

const LIKELIHOOD_STREAM: u64 = 0x4C49_4B45;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    /// Trials per skill and level triple in the likelihood training sweep.
    pub sweep_trials: u32,
    pub std_floor: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self { sweep_trials: 2, std_floor: DEFAULT_STD_FLOOR }
    }
}

fn default_tool() -> String {
    "plastic_fork".into()
}

fn default_budget() -> u32 {
    DEFAULT_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_tool")]
    pub tool: String,
    #[serde(default)]
    pub master_seed: u64,
    pub seeds_per_plate: u32,
    #[serde(default = "default_budget")]
    pub budget: u32,
    pub policies: Vec<Policy>,
    /// Calibration dataset path, relative to the config file.
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub params: PolicyParams,
    #[serde(default)]
    pub estimator: EstimatorSettings,
    #[serde(rename = "plate")]
    pub plates: Vec<PlateSpec>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != EXPERIMENT_SCHEMA_VERSION {
            return Err(Error::Schema {
                document: "experiment config".into(),
                found: self.schema_version,
                expected: EXPERIMENT_SCHEMA_VERSION,
            });
        }
        if self.policies.is_empty() {
            return Err(Error::Config("policies must list at least one policy".into()));
        }
        let mut seen = BTreeSet::new();
        for policy in &self.policies {
            if !seen.insert(policy) {
                return Err(Error::Config(format!("policy `{policy}` listed twice")));
            }
        }
        if self.seeds_per_plate == 0 || self.budget == 0 {
            return Err(Error::Config("seeds_per_plate and budget must be at least 1".into()));
        }
        if self.plates.is_empty() {
            return Err(Error::Config("at least one [[plate]] is required".into()));
        }
        let mut ids = BTreeSet::new();
        for plate in &self.plates {
            if plate.plate_id.is_empty() || plate.plate_id.contains(':') || plate.plate_id.contains(',') {
                return Err(Error::Config(format!("invalid plate_id `{}`", plate.plate_id)));
            }
            if !ids.insert(&plate.plate_id) {
                return Err(Error::Config(format!("plate_id `{}` listed twice", plate.plate_id)));
            }
        }
        if self.estimator.sweep_trials == 0 || !(self.estimator.std_floor > 0.0) {
            return Err(Error::Config("estimator sweep_trials and std_floor must be positive".into()));
        }
        Ok(())
    }

    /// Digest of the parsed configuration.
    pub fn digest(&self) -> String {
        crate::digest_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    pub fn needs_calibration(&self) -> bool {
        self.policies.iter().any(|p| p.uses_calibration())
    }

    pub fn needs_likelihood(&self) -> bool {
        self.policies.iter().any(|p| p.uses_belief())
    }
}

/// Models and data an experiment runs against.
#[derive(Debug, Clone)]
pub struct ExperimentInputs {
    pub sim: SimModel,
    pub registry: FoodRegistry,
    pub priors: PriorTable,
    pub category: CategoryTable,
    pub calibration: Option<CalibrationDataset>,
    pub likelihood: Option<LikelihoodModel>,
}

impl ExperimentInputs {
    /// Bundled models plus `calibration`; likelihoods are fitted from a
    /// property sweep when a belief policy needs them.
    pub fn prepare(config: &ExperimentConfig, calibration: Option<CalibrationDataset>) -> Result<Self> {
        let sim = SimModel::default();
        let registry = FoodRegistry::default();
        let likelihood = if config.needs_likelihood() {
            let tool = registry.tool(&config.tool)?;
            let seed = rng::derive_seed(config.master_seed, LIKELIHOOD_STREAM, 0);
            let sweep = run_property_sweep(seed, &sim, tool, config.estimator.sweep_trials)?;
            Some(fit_likelihoods(&sweep, config.estimator.std_floor)?)
        } else {
            None
        };
        Ok(Self {
            sim,
            registry,
            priors: PriorTable::default(),
            category: CategoryTable::default(),
            calibration,
            likelihood,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// One report per policy, in config order.
    pub reports: Vec<MetricsReport>,
    /// Policy-major, then plate, then seed.
    pub logs: Vec<EpisodeLog>,
}

impl ExperimentResult {
    pub fn report(&self, policy: Policy) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.policy == policy.name())
    }
}

pub fn run_id(policy: Policy, plate_id: &str, seed_index: u32) -> String {
    format!("{policy}:{plate_id}:{seed_index}")
}

/// Runs every `(policy, plate, seed)` cell on up to `jobs` threads. Every
/// policy sees the same plate for a given `(plate, seed)`.
pub fn run_experiment(config: &ExperimentConfig, inputs: &ExperimentInputs, jobs: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let tool = inputs.registry.tool(&config.tool)?;
    let success = match (&inputs.calibration, config.needs_calibration()) {
        (Some(dataset), true) => {
            if dataset.tool != config.tool {
                return Err(Error::Config(format!(
                    "calibration dataset is for `{}` but the experiment uses `{}`",
                    dataset.tool, config.tool
                )));
            }
            Some(SuccessTable::from_calibration(dataset, config.params.tau, config.params.alpha)?)
        }
        (None, true) => return Err(Error::Config("calibrated policies need a calibration dataset".into())),
        (_, false) => None,
    };
    let ctx = EpisodeContext {
        sim: &inputs.sim,
        tool,
        priors: &inputs.priors,
        category: &inputs.category,
        likelihood: inputs.likelihood.as_ref(),
        success: success.as_ref(),
        params: config.params,
        budget: config.budget,
    };
    let digest = config.digest();

    let mut plates = Vec::with_capacity(config.plates.len() * config.seeds_per_plate as usize);
    for (plate_index, spec) in config.plates.iter().enumerate() {
        for seed_index in 0..config.seeds_per_plate {
            let cell_seed = rng::derive_seed(config.master_seed, plate_index as u64, seed_index as u64);
            let plate = make_plate(spec, &inputs.registry, rng::derive_seed(cell_seed, PLATE_STREAM, 0))?;
            plates.push((seed_index, cell_seed, plate));
        }
    }
    let cells: Vec<(Policy, usize)> =
        config.policies.iter().flat_map(|p| (0..plates.len()).map(move |i| (*p, i))).collect();

    let run = |&(policy, i): &(Policy, usize)| {
        let (seed_index, cell_seed, plate) = &plates[i];
        let tag = EpisodeTag {
            run_id: run_id(policy, &plate.plate_id, *seed_index),
            seed_index: *seed_index,
            config_digest: digest.clone(),
        };
        run_episode(&ctx, plate, policy, *cell_seed, &tag)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let logs: Vec<EpisodeLog> = pool.install(|| cells.par_iter().map(run).collect::<Result<_>>())?;

    let reports = config
        .policies
        .iter()
        .map(|policy| {
            let mine: Vec<EpisodeLog> = logs.iter().filter(|l| l.policy == *policy).cloned().collect();
            compute_metrics(&mine)
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentResult { reports, logs })
}
