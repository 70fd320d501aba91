//! Domain types: properties, skills, tools, foods and plates.

pub mod plate;
pub mod property;
pub mod registry;
pub mod skill;

pub use plate::{
    advance_clock, effective_properties, make_plate, DriftParams, FoodItemState, ItemFlags, ItemId, PlateEntry,
    PlateSpec, PlateState,
};
pub use property::{Property, PropertyLevel, PropertyVector, Shape, Size, LEVELS};
pub use registry::{display_from_label, FoodEntry, FoodRegistry, LevelSpec, Tool};
pub use skill::{Skill, SkillKind};
