use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of discrete levels for each scalar food property.
pub const LEVELS: usize = 5;

/// A score on the 1 (very hard / dry / runny) to 5 (very soft / wet / sticky) scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PropertyLevel(u8);

impl PropertyLevel {
    pub const MIN: PropertyLevel = PropertyLevel(1);
    pub const MAX: PropertyLevel = PropertyLevel(5);

    pub fn new(value: u8) -> Result<Self> {
        if (1..=LEVELS as u8).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::LevelOutOfRange(value as i64))
        }
    }

    /// Level whose zero-based index is `index`. Panics when `index >= LEVELS`.
    pub fn from_index(index: usize) -> Self {
        assert!(index < LEVELS, "level index {index} out of range");
        Self(index as u8 + 1)
    }

    /// Rounds to the nearest level and clamps into `[1, 5]`.
    pub fn clamped(value: f64) -> Self {
        let rounded = value.round().clamp(1.0, LEVELS as f64);
        Self(rounded as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn all() -> impl Iterator<Item = PropertyLevel> {
        (0..LEVELS).map(Self::from_index)
    }
}

impl TryFrom<u8> for PropertyLevel {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PropertyLevel> for u8 {
    fn from(level: PropertyLevel) -> u8 {
        level.0
    }
}

impl fmt::Display for PropertyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The three latent scalar properties tracked by the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Softness,
    Moisture,
    Viscosity,
}

impl Property {
    pub const ALL: [Property; 3] = [Property::Softness, Property::Moisture, Property::Viscosity];

    pub fn index(self) -> usize {
        match self {
            Property::Softness => 0,
            Property::Moisture => 1,
            Property::Viscosity => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Property::Softness => "softness",
            Property::Moisture => "moisture",
            Property::Viscosity => "viscosity",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed registry of shape descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Round,
    Oval,
    Cylindrical,
    Cubic,
    Block,
    Amorphous,
    Noodle,
    Slice,
    Floret,
    Wedge,
}

impl Shape {
    pub const ALL: [Shape; 10] = [
        Shape::Round,
        Shape::Oval,
        Shape::Cylindrical,
        Shape::Cubic,
        Shape::Block,
        Shape::Amorphous,
        Shape::Noodle,
        Shape::Slice,
        Shape::Floret,
        Shape::Wedge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Round => "round",
            Shape::Oval => "oval",
            Shape::Cylindrical => "cylindrical",
            Shape::Cubic => "cubic",
            Shape::Block => "block",
            Shape::Amorphous => "amorphous",
            Shape::Noodle => "noodle",
            Shape::Slice => "slice",
            Shape::Floret => "floret",
            Shape::Wedge => "wedge",
        }
    }

    /// Capitalized form used in natural-language summaries ("Oval").
    pub fn title(self) -> String {
        capitalize(self.name())
    }

    pub fn parse(text: &str) -> Option<Shape> {
        let lowered = text.trim().to_ascii_lowercase();
        Shape::ALL.into_iter().find(|s| {
            s.name() == lowered || (lowered.starts_with(s.name()) && lowered.len() <= s.name().len() + 2)
        })
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Size {
    #[serde(rename = "bite-sized")]
    BiteSized,
    #[serde(rename = "large")]
    Large,
}

impl Size {
    pub fn name(self) -> &'static str {
        match self {
            Size::BiteSized => "bite-sized",
            Size::Large => "large",
        }
    }

    pub fn title(self) -> String {
        capitalize(self.name())
    }

    pub fn parse(text: &str) -> Option<Size> {
        let lowered = text.trim().to_ascii_lowercase();
        if lowered.starts_with("bite") || lowered == "small" {
            Some(Size::BiteSized)
        } else if lowered.starts_with("large") || lowered == "big" {
            Some(Size::Large)
        } else {
            None
        }
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Physical description of one food item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PropertyVector {
    pub shape: Shape,
    pub size: Size,
    pub softness: PropertyLevel,
    pub moisture: PropertyLevel,
    pub viscosity: PropertyLevel,
}

impl PropertyVector {
    pub fn get(&self, property: Property) -> PropertyLevel {
        match property {
            Property::Softness => self.softness,
            Property::Moisture => self.moisture,
            Property::Viscosity => self.viscosity,
        }
    }

    pub fn with(mut self, property: Property, level: PropertyLevel) -> Self {
        match property {
            Property::Softness => self.softness = level,
            Property::Moisture => self.moisture = level,
            Property::Viscosity => self.viscosity = level,
        }
        self
    }

    /// `(softness, moisture, viscosity)` as zero-based indices.
    pub fn level_indices(&self) -> [usize; 3] {
        [self.softness.index(), self.moisture.index(), self.viscosity.index()]
    }

    /// Summary line: `Shape: Oval, Size: Bite-sized, Softness: 1, Moisture: 1, Viscosity: 2`.
    pub fn summary_line(&self) -> String {
        format!(
            "Shape: {}, Size: {}, Softness: {}, Moisture: {}, Viscosity: {}",
            self.shape.title(),
            self.size.title(),
            self.softness,
            self.moisture,
            self.viscosity
        )
    }
}

pub(crate) fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
