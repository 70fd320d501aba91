//! Food and tool registry loaded from a versioned TOML document.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::plate::DriftParams;
use crate::model::property::{capitalize, PropertyLevel, PropertyVector, Shape, Size, LEVELS};

pub const REGISTRY_SCHEMA_VERSION: u32 = 1;

const DEFAULT_REGISTRY: &str = include_str!("../../assets/registry.toml");

/// Either a fixed level or sampling weights over the five levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelSpec {
    Point(u8),
    Weights([f64; LEVELS]),
}

impl LevelSpec {
    pub(crate) fn validate(&self, what: &str) -> Result<()> {
        match self {
            LevelSpec::Point(v) => PropertyLevel::new(*v).map(|_| ()),
            LevelSpec::Weights(w) => {
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                    Err(Error::Config(format!("{what}: weights must be non-negative with positive sum")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Most likely level; ties resolve to the lower level.
    pub fn mode(&self) -> PropertyLevel {
        match self {
            LevelSpec::Point(v) => PropertyLevel::from_index(*v as usize - 1),
            LevelSpec::Weights(w) => {
                let mut best = 0;
                for i in 1..LEVELS {
                    if w[i] > w[best] {
                        best = i;
                    }
                }
                PropertyLevel::from_index(best)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PropertyLevel {
        match self {
            LevelSpec::Point(v) => PropertyLevel::from_index(*v as usize - 1),
            LevelSpec::Weights(w) => {
                let dist = WeightedIndex::new(w).expect("weights validated at load");
                PropertyLevel::from_index(dist.sample(rng))
            }
        }
    }

    /// Normalized probability vector.
    pub fn probabilities(&self) -> [f64; LEVELS] {
        match self {
            LevelSpec::Point(v) => {
                let mut p = [0.0; LEVELS];
                p[*v as usize - 1] = 1.0;
                p
            }
            LevelSpec::Weights(w) => {
                let total: f64 = w.iter().sum();
                w.map(|x| x / total)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    /// Added to skewer and cut logits.
    pub hardness_offset: f64,
    /// Added to scoop logits.
    pub scoop_capacity: f64,
    /// Multiplier on haptic feature magnitudes.
    #[serde(default = "unit")]
    pub stiffness: f64,
}

fn unit() -> f64 {
    1.0
}

impl Tool {
    /// "plastic_fork" -> "plastic fork"
    pub fn display_name(&self) -> String {
        self.name.replace('_', " ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoodEntry {
    #[serde(default)]
    pub display: Option<String>,
    pub shape: Shape,
    pub size: Size,
    pub softness: LevelSpec,
    pub moisture: LevelSpec,
    pub viscosity: LevelSpec,
    #[serde(default)]
    pub tags: Vec<String>,
    /// Served with a dipping sauce on the plate.
    #[serde(default)]
    pub dippable: bool,
    #[serde(default)]
    pub drift: DriftParams,
}

impl FoodEntry {
    pub fn mode_props(&self) -> PropertyVector {
        PropertyVector {
            shape: self.shape,
            size: self.size,
            softness: self.softness.mode(),
            moisture: self.moisture.mode(),
            viscosity: self.viscosity.mode(),
        }
    }

    pub fn sample_props<R: Rng + ?Sized>(&self, rng: &mut R) -> PropertyVector {
        PropertyVector {
            shape: self.shape,
            size: self.size,
            softness: self.softness.sample(rng),
            moisture: self.moisture.sample(rng),
            viscosity: self.viscosity.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryDocument {
    schema_version: u32,
    #[serde(default, rename = "tool")]
    tools: Vec<Tool>,
    #[serde(default)]
    food: BTreeMap<String, FoodEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoodRegistry {
    foods: BTreeMap<String, FoodEntry>,
    tools: BTreeMap<String, Tool>,
}

impl FoodRegistry {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: RegistryDocument = toml::from_str(text)?;
        if doc.schema_version != REGISTRY_SCHEMA_VERSION {
            return Err(Error::Schema {
                document: "food registry".into(),
                found: doc.schema_version,
                expected: REGISTRY_SCHEMA_VERSION,
            });
        }
        let mut tools = BTreeMap::new();
        for tool in doc.tools {
            if tools.contains_key(&tool.name) {
                return Err(Error::Config(format!("duplicate tool `{}`", tool.name)));
            }
            if !(tool.stiffness > 0.0) {
                return Err(Error::Config(format!("tool `{}`: stiffness must be positive", tool.name)));
            }
            tools.insert(tool.name.clone(), tool);
        }
        for (label, entry) in &doc.food {
            entry.softness.validate(&format!("{label}.softness"))?;
            entry.moisture.validate(&format!("{label}.moisture"))?;
            entry.viscosity.validate(&format!("{label}.viscosity"))?;
            if !entry.drift.softness_rate.is_finite() {
                return Err(Error::Config(format!("{label}.drift.softness_rate must be finite")));
            }
        }
        Ok(Self { foods: doc.food, tools })
    }

    pub fn food(&self, label: &str) -> Result<&FoodEntry> {
        self.foods.get(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn tool(&self, name: &str) -> Result<&Tool> {
        self.tools.get(name).ok_or_else(|| Error::UnknownTool(name.to_string()))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.foods.keys().map(String::as_str)
    }

    pub fn tools(&self) -> impl Iterator<Item = &Tool> {
        self.tools.values()
    }

    pub fn len(&self) -> usize {
        self.foods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.foods.is_empty()
    }

    /// Display name: explicit `display` or the label title-cased ("soft_tofu" -> "Soft Tofu").
    pub fn display_name(&self, label: &str) -> String {
        match self.foods.get(label).and_then(|e| e.display.clone()) {
            Some(name) => name,
            None => display_from_label(label),
        }
    }

    pub fn tags(&self, label: &str) -> BTreeSet<&str> {
        self.foods
            .get(label)
            .map(|e| e.tags.iter().map(String::as_str).collect())
            .unwrap_or_default()
    }
}

impl Default for FoodRegistry {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_REGISTRY).expect("bundled registry is valid")
    }
}

pub fn display_from_label(label: &str) -> String {
    label.split(['_', '-', ' ']).filter(|w| !w.is_empty()).map(capitalize).collect::<Vec<_>>().join(" ")
}
