use serde::{Deserialize, Serialize};

use crate::calibration::LikelihoodModel;
use crate::error::{Error, Result};
use crate::estimator::belief::{Belief, Categorical, PropertyLogits, Provenance};
use crate::model::{ItemId, Property, PropertyLevel, LEVELS};
use crate::sim::{Channel, Modality, ObservationSeries};

/// Channels admitted into the likelihood product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMask([bool; Channel::COUNT]);

impl ChannelMask {
    pub const ALL: ChannelMask = ChannelMask([true; Channel::COUNT]);

    pub fn without(modality: Modality) -> Self {
        ChannelMask(Channel::ALL.map(|c| c.modality() != modality))
    }

    /// Visual and pose channels.
    pub fn vision_only() -> Self {
        Self::without(Modality::Haptic)
    }

    /// Haptic and pose channels.
    pub fn haptic_only() -> Self {
        Self::without(Modality::Visual)
    }

    pub fn includes(&self, channel: Channel) -> bool {
        self.0[channel.index()]
    }
}

impl Default for ChannelMask {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefUpdate {
    pub belief: Belief,
    pub logits: PropertyLogits,
    /// Which properties passed the confidence gate.
    pub updated: [bool; 3],
}

/// Log posterior over one property's levels from prior and masked features.
fn log_posterior(
    prior: &Categorical,
    property: Property,
    obs: &ObservationSeries,
    lik: &LikelihoodModel,
    mask: ChannelMask,
) -> Result<[f64; LEVELS]> {
    let mut logp = [0.0; LEVELS];
    for (i, slot) in logp.iter_mut().enumerate() {
        let level = PropertyLevel::from_index(i);
        let mut l = prior.probs()[i].ln();
        for channel in Channel::ALL {
            if mask.includes(channel) {
                l += lik.log_likelihood(channel, property, level, obs.feature(channel))?;
            }
        }
        *slot = l;
    }
    let m = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::Model(format!("{} posterior has no finite mass", property.name())));
    }
    let lse = m + logp.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    Ok(logp.map(|l| l - lse))
}

/// Confidence-gated refinement of one item's belief from one observation.
///
/// Each property gets a naive-Bayes posterior; it replaces the current
/// distribution only if its largest log probability exceeds `theta_th`.
pub fn update_belief(
    belief: &Belief,
    item_id: ItemId,
    obs: &ObservationSeries,
    lik: &LikelihoodModel,
    theta_th: f64,
    mask: ChannelMask,
) -> Result<BeliefUpdate> {
    if !lik.is_complete() {
        return Err(Error::Model("likelihood model is not fully fitted".into()));
    }
    let mut entry = belief.get(item_id)?.clone();
    let mut rows = [[0.0; LEVELS]; 3];
    let mut updated = [false; 3];
    for property in Property::ALL {
        let row = log_posterior(entry.get(property), property, obs, lik, mask)?;
        rows[property.index()] = row;
        let peak = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if peak > theta_th {
            entry.set(property, Categorical::from_log(row)?);
            updated[property.index()] = true;
        }
    }
    if updated.iter().any(|u| *u) {
        entry.provenance = Provenance::Refined;
    }
    Ok(BeliefUpdate { belief: belief.with_entry(item_id, entry), logits: PropertyLogits(rows), updated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{fit_likelihoods, run_property_sweep, DEFAULT_STD_FLOOR};
    use crate::estimator::belief::BeliefEntry;
    use crate::model::{FoodRegistry, PropertyVector, Shape, Size};
    use crate::sim::{synth_observations, Outcome, SimModel};
    use crate::model::Skill;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_noise_lik() -> (SimModel, LikelihoodModel) {
        let mut sim = SimModel::default();
        sim.observation = sim.observation.noiseless();
        let tool = FoodRegistry::default().tool("plastic_fork").unwrap().clone();
        let lik = fit_likelihoods(&run_property_sweep(1, &sim, &tool, 1).unwrap(), DEFAULT_STD_FLOOR).unwrap();
        (sim, lik)
    }

    fn one_item() -> Belief {
        Belief::default().with_entry(ItemId(0), BeliefEntry::uniform("x"))
    }

    fn obs_at(sim: &SimModel, s: u8, m: u8, v: u8) -> ObservationSeries {
        let tool = FoodRegistry::default().tool("plastic_fork").unwrap().clone();
        let props = PropertyVector {
            shape: Shape::Cubic,
            size: Size::BiteSized,
            softness: PropertyLevel::new(s).unwrap(),
            moisture: PropertyLevel::new(m).unwrap(),
            viscosity: PropertyLevel::new(v).unwrap(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let outcome = Outcome { success: false, attempt_index: 1, skill: Skill::Skewer };
        synth_observations(&mut rng, &sim.observation, &tool, Skill::Skewer, &props, &outcome)
    }

    #[test]
    fn gate_extremes() {
        let (sim, lik) = zero_noise_lik();
        let obs = obs_at(&sim, 2, 4, 3);
        let all = update_belief(&one_item(), ItemId(0), &obs, &lik, f64::NEG_INFINITY, ChannelMask::ALL).unwrap();
        assert_eq!(all.updated, [true; 3]);
        assert_eq!(all.belief.get(ItemId(0)).unwrap().provenance, Provenance::Refined);
        let none = update_belief(&one_item(), ItemId(0), &obs, &lik, 0.0, ChannelMask::ALL).unwrap();
        assert_eq!(none.updated, [false; 3]);
        assert_eq!(none.belief, one_item());
    }

    #[test]
    fn zero_noise_recovers_every_level() {
        let (sim, lik) = zero_noise_lik();
        for level in 1..=5u8 {
            let obs = obs_at(&sim, level, level, level);
            let up = update_belief(&one_item(), ItemId(0), &obs, &lik, f64::NEG_INFINITY, ChannelMask::ALL).unwrap();
            let entry = up.belief.get(ItemId(0)).unwrap();
            assert_eq!(entry.modes().map(|l| l.value()), [level; 3]);
            assert!(entry.is_normalized());
            for row in up.logits.0 {
                let lse = row.iter().map(|l| l.exp()).sum::<f64>().ln();
                assert!(lse.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn masks_select_modalities() {
        assert!(!ChannelMask::vision_only().includes(Channel::PeakForce));
        assert!(ChannelMask::vision_only().includes(Channel::Gloss));
        assert!(ChannelMask::vision_only().includes(Channel::DescentDepth));
        assert!(ChannelMask::haptic_only().includes(Channel::PeakForce));
        assert!(!ChannelMask::haptic_only().includes(Channel::Residue));
        assert!(ChannelMask::haptic_only().includes(Channel::DescentDepth));
    }

    #[test]
    fn unfitted_likelihood_and_missing_item_rejected() {
        let (sim, lik) = zero_noise_lik();
        let obs = obs_at(&sim, 3, 3, 3);
        let empty = LikelihoodModel::unfitted(DEFAULT_STD_FLOOR);
        assert!(matches!(update_belief(&one_item(), ItemId(0), &obs, &empty, 0.0, ChannelMask::ALL), Err(Error::Model(_))));
        assert!(matches!(update_belief(&one_item(), ItemId(9), &obs, &lik, 0.0, ChannelMask::ALL), Err(Error::State(_))));
    }
}
