//! Synthetic visuo-haptic features summarizing one skill execution.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Property, PropertyVector, Skill, Tool, LEVELS};
use crate::sim::execute::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    PeakForce,
    ForceSlope,
    PenetrationDepth,
    DeformationRatio,
    Gloss,
    Residue,
    DescentDepth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Haptic,
    Visual,
    Pose,
}

impl Channel {
    pub const COUNT: usize = 7;
    pub const ALL: [Channel; Channel::COUNT] = [
        Channel::PeakForce,
        Channel::ForceSlope,
        Channel::PenetrationDepth,
        Channel::DeformationRatio,
        Channel::Gloss,
        Channel::Residue,
        Channel::DescentDepth,
    ];

    pub fn index(self) -> usize {
        Channel::ALL.iter().position(|c| *c == self).unwrap()
    }

    pub fn modality(self) -> Modality {
        match self {
            Channel::PeakForce | Channel::ForceSlope | Channel::PenetrationDepth => Modality::Haptic,
            Channel::DeformationRatio | Channel::Gloss | Channel::Residue => Modality::Visual,
            Channel::DescentDepth => Modality::Pose,
        }
    }

    /// The property whose level sets this channel's mean.
    pub fn governing_property(self) -> Property {
        match self {
            Channel::Gloss => Property::Moisture,
            Channel::Residue => Property::Viscosity,
            _ => Property::Softness,
        }
    }

    /// Force channels scale with tool stiffness.
    fn scales_with_stiffness(self) -> bool {
        matches!(self, Channel::PeakForce | Channel::ForceSlope)
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::PeakForce => "peak_force",
            Channel::ForceSlope => "force_slope",
            Channel::PenetrationDepth => "penetration_depth",
            Channel::DeformationRatio => "deformation_ratio",
            Channel::Gloss => "gloss",
            Channel::Residue => "residue",
            Channel::DescentDepth => "descent_depth",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HapticFeatures {
    /// N
    pub peak_force: f64,
    /// N/s
    pub force_slope: f64,
    /// mm
    pub penetration_depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisualFeatures {
    pub deformation_ratio: f64,
    pub gloss: f64,
    pub residue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseFeatures {
    /// mm
    pub descent_depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    pub haptic: HapticFeatures,
    pub visual: VisualFeatures,
    pub pose: PoseFeatures,
    /// Number of time steps in the underlying recording.
    pub length: u32,
}

impl ObservationSeries {
    pub fn feature(&self, channel: Channel) -> f64 {
        match channel {
            Channel::PeakForce => self.haptic.peak_force,
            Channel::ForceSlope => self.haptic.force_slope,
            Channel::PenetrationDepth => self.haptic.penetration_depth,
            Channel::DeformationRatio => self.visual.deformation_ratio,
            Channel::Gloss => self.visual.gloss,
            Channel::Residue => self.visual.residue,
            Channel::DescentDepth => self.pose.descent_depth,
        }
    }

    pub fn from_features(features: [f64; Channel::COUNT], length: u32) -> Self {
        Self {
            haptic: HapticFeatures { peak_force: features[0], force_slope: features[1], penetration_depth: features[2] },
            visual: VisualFeatures { deformation_ratio: features[3], gloss: features[4], residue: features[5] },
            pose: PoseFeatures { descent_depth: features[6] },
            length,
        }
    }

    pub fn features(&self) -> [f64; Channel::COUNT] {
        Channel::ALL.map(|c| self.feature(c))
    }

    pub fn is_valid(&self) -> bool {
        self.length >= 1 && self.features().iter().all(|x| x.is_finite())
    }
}

/// Per-level Gaussian family for one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub means: [f64; LEVELS],
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    pub peak_force: ChannelParams,
    pub force_slope: ChannelParams,
    pub penetration_depth: ChannelParams,
    pub deformation_ratio: ChannelParams,
    pub gloss: ChannelParams,
    pub residue: ChannelParams,
    pub descent_depth: ChannelParams,
}

impl ObservationModel {
    pub fn channel(&self, channel: Channel) -> &ChannelParams {
        match channel {
            Channel::PeakForce => &self.peak_force,
            Channel::ForceSlope => &self.force_slope,
            Channel::PenetrationDepth => &self.penetration_depth,
            Channel::DeformationRatio => &self.deformation_ratio,
            Channel::Gloss => &self.gloss,
            Channel::Residue => &self.residue,
            Channel::DescentDepth => &self.descent_depth,
        }
    }

    fn channel_mut(&mut self, channel: Channel) -> &mut ChannelParams {
        match channel {
            Channel::PeakForce => &mut self.peak_force,
            Channel::ForceSlope => &mut self.force_slope,
            Channel::PenetrationDepth => &mut self.penetration_depth,
            Channel::DeformationRatio => &mut self.deformation_ratio,
            Channel::Gloss => &mut self.gloss,
            Channel::Residue => &mut self.residue,
            Channel::DescentDepth => &mut self.descent_depth,
        }
    }

    /// Same means, every channel noise-free.
    pub fn noiseless(&self) -> Self {
        self.with_noise_scale(0.0)
    }

    pub fn with_noise_scale(&self, scale: f64) -> Self {
        let mut out = self.clone();
        for c in Channel::ALL {
            out.channel_mut(c).noise_std *= scale;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for c in Channel::ALL {
            let p = self.channel(c);
            if p.means.iter().any(|m| !m.is_finite()) || !(p.noise_std >= 0.0) || !p.noise_std.is_finite() {
                return Err(Error::Model(format!("channel {c}: means must be finite and noise_std >= 0")));
            }
            let increasing = p.means.windows(2).all(|w| w[1] > w[0]);
            let decreasing = p.means.windows(2).all(|w| w[1] < w[0]);
            if !(increasing || decreasing) {
                return Err(Error::Model(format!("channel {c}: means must be strictly monotone in level")));
            }
        }
        for (c, dir) in [
            (Channel::PeakForce, -1.0),
            (Channel::DeformationRatio, 1.0),
            (Channel::Gloss, 1.0),
            (Channel::Residue, 1.0),
        ] {
            let m = &self.channel(c).means;
            if (m[LEVELS - 1] - m[0]) * dir <= 0.0 {
                return Err(Error::Model(format!("channel {c} has the wrong monotone direction")));
            }
        }
        Ok(())
    }

    /// Mean of `channel` for the given properties and tool.
    pub fn mean(&self, channel: Channel, tool: &Tool, props: &PropertyVector) -> f64 {
        let level = props.get(channel.governing_property());
        let base = self.channel(channel).means[level.index()];
        if channel.scales_with_stiffness() {
            base * tool.stiffness
        } else {
            base
        }
    }
}

fn base_length(skill: Skill) -> u32 {
    match skill {
        Skill::Skewer => 40,
        Skill::Scoop => 55,
        Skill::Twirl => 70,
        Skill::Dip => 60,
        Skill::Push => 35,
        Skill::Cut => 50,
    }
}

/// Draws one feature summary. One standard-normal draw per channel in
/// [`Channel::ALL`] order, regardless of noise level.
pub fn synth_observations<R: Rng + ?Sized>(
    rng: &mut R,
    model: &ObservationModel,
    tool: &Tool,
    skill: Skill,
    props: &PropertyVector,
    outcome: &Outcome,
) -> ObservationSeries {
    let mut features = [0.0; Channel::COUNT];
    for channel in Channel::ALL {
        let z: f64 = rng.sample(StandardNormal);
        features[channel.index()] = model.mean(channel, tool, props) + model.channel(channel).noise_std * z;
    }
    let length = base_length(skill) + if outcome.success { 12 } else { 0 };
    ObservationSeries::from_features(features, length)
}
