//! Plates, food items and their ground-truth state.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::property::{PropertyLevel, PropertyVector, Size};
use crate::model::registry::FoodRegistry;

pub const PLATE_RADIUS_CM: f64 = 13.0;
const BITE_FOOTPRINT_CM: f64 = 1.5;
const LARGE_FOOTPRINT_CM: f64 = 3.0;
/// Fraction of the plate area that item footprints may cover.
const MAX_FILL: f64 = 0.55;
const PLACEMENT_TRIES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u32);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Linear softness drift: `softness + rate * max(0, clock - onset)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DriftParams {
    pub softness_rate: f64,
    pub onset: u32,
}

impl DriftParams {
    pub fn drifted_softness(&self, softness: PropertyLevel, clock: u32) -> PropertyLevel {
        let elapsed = clock.saturating_sub(self.onset) as f64;
        PropertyLevel::clamped(softness.value() as f64 + self.softness_rate * elapsed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ItemFlags {
    pub cut_applied: bool,
    pub braced: bool,
    pub acquired: bool,
    pub removed: bool,
}

impl ItemFlags {
    pub fn is_terminal(&self) -> bool {
        self.acquired || self.removed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoodItemState {
    pub item_id: ItemId,
    pub label: String,
    /// Plate coordinates in cm, origin at the plate center.
    pub position: [f64; 2],
    pub true_props: PropertyVector,
    pub drift: DriftParams,
    pub flags: ItemFlags,
    pub dippable: bool,
}

impl FoodItemState {
    /// Ground-truth properties at `clock`, with drift and manipulation flags applied.
    pub fn effective_properties(&self, clock: u32) -> Result<PropertyVector> {
        if self.flags.removed {
            return Err(Error::State(format!("item {} was removed from the plate", self.item_id)));
        }
        let mut props = self.true_props;
        props.softness = self.drift.drifted_softness(props.softness, clock);
        if self.flags.cut_applied {
            props.size = Size::BiteSized;
        }
        Ok(props)
    }

    /// Current observable size (vision sees cuts).
    pub fn observed_size(&self) -> Size {
        if self.flags.cut_applied {
            Size::BiteSized
        } else {
            self.true_props.size
        }
    }

    pub fn mark_acquired(mut self) -> Result<Self> {
        if self.flags.removed {
            return Err(Error::State(format!("item {} already removed", self.item_id)));
        }
        self.flags.acquired = true;
        Ok(self)
    }

    pub fn mark_removed(mut self) -> Result<Self> {
        if self.flags.acquired {
            return Err(Error::State(format!("item {} already acquired", self.item_id)));
        }
        self.flags.removed = true;
        Ok(self)
    }

    fn footprint(&self) -> f64 {
        footprint(self.true_props.size)
    }
}

/// Free-function form of [`FoodItemState::effective_properties`].
pub fn effective_properties(item: &FoodItemState, clock: u32) -> Result<PropertyVector> {
    item.effective_properties(clock)
}

fn footprint(size: Size) -> f64 {
    match size {
        Size::BiteSized => BITE_FOOTPRINT_CM,
        Size::Large => LARGE_FOOTPRINT_CM,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlateEntry {
    pub label: String,
    #[serde(default = "one")]
    pub count: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlateSpec {
    pub plate_id: String,
    #[serde(default)]
    pub items: Vec<PlateEntry>,
    /// A dipping sauce is served with the plate; every item becomes dippable.
    #[serde(default)]
    pub sauce: bool,
}

impl PlateSpec {
    pub fn new(plate_id: impl Into<String>, items: &[(&str, u32)]) -> Self {
        Self {
            plate_id: plate_id.into(),
            items: items.iter().map(|(label, count)| PlateEntry { label: label.to_string(), count: *count }).collect(),
            sauce: false,
        }
    }

    pub fn with_sauce(mut self) -> Self {
        self.sauce = true;
        self
    }

    pub fn item_count(&self) -> usize {
        self.items.iter().map(|e| e.count as usize).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateState {
    pub plate_id: String,
    pub items: Vec<FoodItemState>,
    pub ee_pose: [f64; 6],
    pub clock: u32,
}

impl PlateState {
    pub fn item(&self, id: ItemId) -> Result<&FoodItemState> {
        self.items
            .iter()
            .find(|i| i.item_id == id)
            .ok_or_else(|| Error::State(format!("no item {id} on plate {}", self.plate_id)))
    }

    /// Returns a new plate with `item` replacing the entry with the same id.
    pub fn with_item(&self, item: FoodItemState) -> Result<PlateState> {
        let mut next = self.clone();
        let slot = next
            .items
            .iter_mut()
            .find(|i| i.item_id == item.item_id)
            .ok_or_else(|| Error::State(format!("no item {} on plate {}", item.item_id, self.plate_id)))?;
        *slot = item;
        Ok(next)
    }

    pub fn with_ee_pose(&self, pose: [f64; 6]) -> PlateState {
        PlateState { ee_pose: pose, ..self.clone() }
    }

    /// Ground-truth digest used to check that paired runs see the same plate.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(&(&self.plate_id, &self.items)).expect("plate serializes");
        crate::digest_hex(&bytes)
    }
}

pub const HOME_POSE: [f64; 6] = [0.0, 0.0, 30.0, std::f64::consts::PI, 0.0, 0.0];

/// Lays out a plate from `spec`, sampling each item's ground truth from the registry.
pub fn make_plate(spec: &PlateSpec, registry: &FoodRegistry, rng_seed: u64) -> Result<PlateState> {
    let entries = spec
        .items
        .iter()
        .map(|e| registry.food(&e.label).map(|food| (e, food)))
        .collect::<Result<Vec<_>>>()?;

    let covered: f64 = entries
        .iter()
        .map(|(e, food)| e.count as f64 * std::f64::consts::PI * footprint(food.size).powi(2))
        .sum();
    let capacity = MAX_FILL * std::f64::consts::PI * PLATE_RADIUS_CM.powi(2);
    if covered > capacity {
        return Err(Error::Layout(format!(
            "plate {} over capacity: footprints cover {covered:.1} cm^2 of {capacity:.1} cm^2 allowed",
            spec.plate_id
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut items: Vec<FoodItemState> = Vec::with_capacity(spec.item_count());
    for (entry, food) in entries {
        // Pieces of one plate entry come from the same food and share ground truth.
        let true_props = food.sample_props(&mut rng);
        for _ in 0..entry.count {
            let radius = footprint(food.size);
            let position = place(&mut rng, radius, &items).ok_or_else(|| {
                Error::Layout(format!("could not place `{}` on plate {} without overlap", entry.label, spec.plate_id))
            })?;
            items.push(FoodItemState {
                item_id: ItemId(items.len() as u32),
                label: entry.label.clone(),
                position,
                true_props,
                drift: food.drift,
                flags: ItemFlags::default(),
                dippable: food.dippable || spec.sauce,
            });
        }
    }
    Ok(PlateState { plate_id: spec.plate_id.clone(), items, ee_pose: HOME_POSE, clock: 0 })
}

fn place(rng: &mut ChaCha8Rng, radius: f64, placed: &[FoodItemState]) -> Option<[f64; 2]> {
    let reach = PLATE_RADIUS_CM - radius;
    for _ in 0..PLACEMENT_TRIES {
        let x = rng.gen_range(-reach..=reach);
        let y = rng.gen_range(-reach..=reach);
        if x.hypot(y) > reach {
            continue;
        }
        let clear = placed.iter().all(|other| {
            let d = (other.position[0] - x).hypot(other.position[1] - y);
            d >= other.footprint() + radius
        });
        if clear {
            return Some([x, y]);
        }
    }
    None
}

/// Advances the attempt-step counter by one.
pub fn advance_clock(plate: &PlateState) -> PlateState {
    PlateState { clock: plate.clock + 1, ..plate.clone() }
}
