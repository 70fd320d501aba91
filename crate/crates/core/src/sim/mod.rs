//! Stochastic interaction simulator: skill outcomes and observation features.

pub mod execute;
pub mod observation;
pub mod outcome;

use serde::{Deserialize, Serialize};

pub use execute::{execute_skill, execute_skill_with_draw, Outcome};
pub use observation::{synth_observations, Channel, Modality, ObservationModel, ObservationSeries};
pub use outcome::{success_probability, GroundTruthOutcomeModel, SkillCoefficients};

use crate::error::{Error, Result};

pub const SIM_MODEL_SCHEMA_VERSION: u32 = 1;

const DEFAULT_SIM_MODEL: &str = include_str!("../../assets/ground_truth.toml");

/// Transition and observation model bundle, loaded from one TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimModel {
    pub outcome: GroundTruthOutcomeModel,
    pub observation: ObservationModel,
}

#[derive(Deserialize)]
struct SimModelDocument {
    schema_version: u32,
    outcome: GroundTruthOutcomeModel,
    observation: ObservationModel,
}

impl SimModel {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: SimModelDocument = toml::from_str(text)?;
        if doc.schema_version != SIM_MODEL_SCHEMA_VERSION {
            return Err(Error::Schema {
                document: "ground-truth model".into(),
                found: doc.schema_version,
                expected: SIM_MODEL_SCHEMA_VERSION,
            });
        }
        doc.outcome.validate()?;
        doc.observation.validate()?;
        Ok(Self { outcome: doc.outcome, observation: doc.observation })
    }
}

impl Default for SimModel {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_SIM_MODEL).expect("bundled ground-truth model is valid")
    }
}
