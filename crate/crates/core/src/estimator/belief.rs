use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ItemId, Property, PropertyLevel, Shape, Size, LEVELS};

/// Normalization tolerance for categorical rows.
pub const NORM_TOL: f64 = 1e-9;

/// Distribution over the five levels of one property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; LEVELS]", into = "[f64; LEVELS]")]
pub struct Categorical([f64; LEVELS]);

impl TryFrom<[f64; LEVELS]> for Categorical {
    type Error = Error;

    fn try_from(weights: [f64; LEVELS]) -> Result<Self> {
        Categorical::from_weights(weights)
    }
}

impl From<Categorical> for [f64; LEVELS] {
    fn from(c: Categorical) -> Self {
        c.0
    }
}

impl Categorical {
    pub fn uniform() -> Self {
        Categorical([1.0 / LEVELS as f64; LEVELS])
    }

    pub fn point(level: PropertyLevel) -> Self {
        let mut p = [0.0; LEVELS];
        p[level.index()] = 1.0;
        Categorical(p)
    }

    /// Normalizes non-negative finite weights with a positive sum.
    pub fn from_weights(weights: [f64; LEVELS]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Argument(format!("invalid categorical weights {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Argument("categorical weights sum to zero".into()));
        }
        Ok(Categorical(weights.map(|w| w / total)))
    }

    /// From log probabilities, normalized by log-sum-exp.
    pub fn from_log(logp: [f64; LEVELS]) -> Result<Self> {
        let m = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::Argument("log probabilities carry no finite mass".into()));
        }
        Categorical::from_weights(logp.map(|l| (l - m).exp()))
    }

    pub fn probs(&self) -> [f64; LEVELS] {
        self.0
    }

    pub fn prob(&self, level: PropertyLevel) -> f64 {
        self.0[level.index()]
    }

    /// Most probable level; the lower level wins ties.
    pub fn mode(&self) -> PropertyLevel {
        let mut best = 0;
        for i in 1..LEVELS {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        PropertyLevel::from_index(best)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.0.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    /// `w * a + (1 - w) * b`, renormalized.
    pub fn mix(w: f64, a: &Categorical, b: &Categorical) -> Categorical {
        let w = w.clamp(0.0, 1.0);
        let mut out = [0.0; LEVELS];
        for i in 0..LEVELS {
            out[i] = w * a.0[i] + (1.0 - w) * b.0[i];
        }
        Categorical::from_weights(out).expect("mixture of distributions is a distribution")
    }

    pub fn is_normalized(&self) -> bool {
        self.0.iter().all(|p| *p >= 0.0) && (self.0.iter().sum::<f64>() - 1.0).abs() <= NORM_TOL
    }
}

/// Per-property log probabilities emitted by one refinement step.
/// Rows: softness, moisture, viscosity. Columns: levels 1..5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyLogits(pub [[f64; LEVELS]; 3]);

impl PropertyLogits {
    pub fn row(&self, property: Property) -> [f64; LEVELS] {
        self.0[property.index()]
    }

    pub fn row_max(&self, property: Property) -> f64 {
        self.row(property).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn row_maxima(&self) -> [f64; 3] {
        Property::ALL.map(|p| self.row_max(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Prior,
    Refined,
    Transferred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefEntry {
    pub label: String,
    pub shape: Shape,
    pub size: Size,
    pub dippable: bool,
    pub softness: Categorical,
    pub moisture: Categorical,
    pub viscosity: Categorical,
    pub provenance: Provenance,
}

impl BeliefEntry {
    pub fn uniform(label: &str) -> Self {
        BeliefEntry {
            label: label.to_string(),
            shape: Shape::Round,
            size: Size::BiteSized,
            dippable: false,
            softness: Categorical::uniform(),
            moisture: Categorical::uniform(),
            viscosity: Categorical::uniform(),
            provenance: Provenance::Prior,
        }
    }

    pub fn get(&self, property: Property) -> &Categorical {
        match property {
            Property::Softness => &self.softness,
            Property::Moisture => &self.moisture,
            Property::Viscosity => &self.viscosity,
        }
    }

    pub fn set(&mut self, property: Property, dist: Categorical) {
        match property {
            Property::Softness => self.softness = dist,
            Property::Moisture => self.moisture = dist,
            Property::Viscosity => self.viscosity = dist,
        }
    }

    /// Replaces shape, size and sauce availability with what is seen on the plate.
    pub fn with_geometry(mut self, shape: Shape, size: Size, dippable: bool) -> Self {
        self.shape = shape;
        self.size = size;
        self.dippable = dippable;
        self
    }

    /// Sum of the three property entropies, in nats.
    pub fn entropy(&self) -> f64 {
        Property::ALL.iter().map(|p| self.get(*p).entropy()).sum()
    }

    pub fn modes(&self) -> [PropertyLevel; 3] {
        Property::ALL.map(|p| self.get(p).mode())
    }

    pub fn is_normalized(&self) -> bool {
        Property::ALL.iter().all(|p| self.get(*p).is_normalized())
    }
}

/// Estimated state of every item seen so far.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub entries: BTreeMap<ItemId, BeliefEntry>,
}

impl Belief {
    pub fn get(&self, id: ItemId) -> Result<&BeliefEntry> {
        self.entries.get(&id).ok_or_else(|| Error::State(format!("item {id} has no belief entry")))
    }

    pub fn with_entry(&self, id: ItemId, entry: BeliefEntry) -> Belief {
        let mut next = self.clone();
        next.entries.insert(id, entry);
        next
    }

    pub fn is_normalized(&self) -> bool {
        self.entries.values().all(BeliefEntry::is_normalized)
    }
}
