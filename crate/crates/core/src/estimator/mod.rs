//! Property-state estimation: commonsense priors, confidence-gated
//! refinement from interaction features, and transfer to new targets.

mod belief;
mod prior;
mod prompt;
mod update;

pub use belief::{Belief, BeliefEntry, Categorical, PropertyLogits, Provenance, NORM_TOL};
pub use prior::{init_prior, transfer_prior, PriorRow, PriorTable, DEFAULT_BLEND_W, PRIOR_TABLE_SCHEMA_VERSION};
pub use prompt::{build_property_prompt, parse_property_answer, PropertyAnswer};
pub use update::{update_belief, BeliefUpdate, ChannelMask};

/// Default confidence gate: a property is refined only when one level
/// holds more than 40% of the posterior mass.
pub fn default_theta_th() -> f64 {
    0.4f64.ln()
}
