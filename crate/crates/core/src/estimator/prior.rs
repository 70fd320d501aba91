use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::belief::{Belief, BeliefEntry, Categorical, Provenance};
use crate::model::{ItemId, LevelSpec, Property, Shape, Size};
use crate::runner::AttemptRecord;

pub const PRIOR_TABLE_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_BLEND_W: f64 = 0.7;

const DEFAULT_PRIOR_TABLE: &str = include_str!("../../assets/prior_table.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorRow {
    pub shape: Shape,
    pub size: Size,
    pub softness: LevelSpec,
    pub moisture: LevelSpec,
    pub viscosity: LevelSpec,
    #[serde(default)]
    pub tags: BTreeSet<String>,
}

impl PriorRow {
    fn spec(&self, property: Property) -> &LevelSpec {
        match property {
            Property::Softness => &self.softness,
            Property::Moisture => &self.moisture,
            Property::Viscosity => &self.viscosity,
        }
    }
}

/// Label-keyed commonsense priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorTable {
    #[serde(default)]
    pub food: BTreeMap<String, PriorRow>,
}

#[derive(Deserialize)]
struct PriorTableDocument {
    schema_version: u32,
    #[serde(default)]
    food: BTreeMap<String, PriorRow>,
}

impl PriorTable {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: PriorTableDocument = toml::from_str(text)?;
        if doc.schema_version != PRIOR_TABLE_SCHEMA_VERSION {
            return Err(Error::Schema {
                document: "prior table".into(),
                found: doc.schema_version,
                expected: PRIOR_TABLE_SCHEMA_VERSION,
            });
        }
        for (label, row) in &doc.food {
            for property in Property::ALL {
                row.spec(property).validate(&format!("prior row `{label}` {}", property.name()))?;
            }
        }
        Ok(Self { food: doc.food })
    }

    pub fn row(&self, label: &str) -> Option<&PriorRow> {
        self.food.get(label)
    }

    pub fn tags(&self, label: &str) -> BTreeSet<&str> {
        self.row(label).map(|r| r.tags.iter().map(String::as_str).collect()).unwrap_or_default()
    }
}

impl Default for PriorTable {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_PRIOR_TABLE).expect("bundled prior table is valid")
    }
}

/// Table prior for `label`, or uniform rows when the label is unknown.
pub fn init_prior(label: &str, table: &PriorTable) -> BeliefEntry {
    let Some(row) = table.row(label) else {
        return BeliefEntry::uniform(label);
    };
    let dist = |p| Categorical::from_weights(row.spec(p).probabilities()).expect("validated at load");
    BeliefEntry {
        label: label.to_string(),
        shape: row.shape,
        size: row.size,
        dippable: false,
        softness: dist(Property::Softness),
        moisture: dist(Property::Moisture),
        viscosity: dist(Property::Viscosity),
        provenance: Provenance::Prior,
    }
}

/// Most recently attempted refined item matching `label`, falling back to a
/// shared tag.
fn transfer_source<'a>(
    belief: &'a Belief,
    label: &str,
    history: &[AttemptRecord],
    table: &PriorTable,
) -> Option<&'a BeliefEntry> {
    let refined = |record: &AttemptRecord| {
        belief.entries.get(&record.item_id).filter(|e| e.provenance == Provenance::Refined)
    };
    if let Some(entry) = history.iter().rev().filter(|r| r.label == label).find_map(refined) {
        return Some(entry);
    }
    let tags = table.tags(label);
    if tags.is_empty() {
        return None;
    }
    history
        .iter()
        .rev()
        .filter(|r| !table.tags(&r.label).is_disjoint(&tags))
        .find_map(refined)
}

/// Initial belief for a new target, blending in what was learned about a
/// similar item earlier in the episode.
pub fn transfer_prior(
    belief: &Belief,
    new_item_id: ItemId,
    new_label: &str,
    history: &[AttemptRecord],
    table: &PriorTable,
    blend_w: f64,
) -> Result<Belief> {
    if belief.entries.contains_key(&new_item_id) {
        return Err(Error::State(format!("item {new_item_id} already has a belief entry")));
    }
    if !(0.0..=1.0).contains(&blend_w) {
        return Err(Error::Argument(format!("blend_w {blend_w} outside [0, 1]")));
    }
    let mut entry = init_prior(new_label, table);
    if let Some(source) = transfer_source(belief, new_label, history, table) {
        for property in Property::ALL {
            entry.set(property, Categorical::mix(blend_w, source.get(property), entry.get(property)));
        }
        entry.provenance = Provenance::Transferred;
    }
    Ok(belief.with_entry(new_item_id, entry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PropertyLevel, Skill};

    fn record(item: u32, label: &str) -> AttemptRecord {
        AttemptRecord {
            plate_id: "p".into(),
            item_id: ItemId(item),
            label: label.into(),
            attempt_index: 1,
            skill: Skill::Skewer,
            success: false,
            psi_max: None,
            gated: [false; 3],
            entropy_pre: None,
            entropy_post: None,
        }
    }

    fn refined_point(label: &str, level: u8) -> BeliefEntry {
        let mut e = BeliefEntry::uniform(label);
        for p in Property::ALL {
            e.set(p, Categorical::point(PropertyLevel::new(level).unwrap()));
        }
        e.provenance = Provenance::Refined;
        e
    }

    #[test]
    fn unknown_label_is_uniform() {
        let e = init_prior("ambrosia", &PriorTable::default());
        for p in Property::ALL {
            assert_eq!(*e.get(p), Categorical::uniform());
        }
        assert_eq!(e.provenance, Provenance::Prior);
    }

    #[test]
    fn nuts_softness_mode_is_one() {
        let e = init_prior("nuts", &PriorTable::default());
        assert_eq!(e.softness.mode().value(), 1);
    }

    #[test]
    fn point_row_returned_unchanged() {
        let table = PriorTable::from_toml_str(
            "schema_version = 1\n[food.x]\nshape = \"cubic\"\nsize = \"bite-sized\"\n\
             softness = [0, 0, 0, 0, 1]\nmoisture = 2\nviscosity = [1, 1, 1, 1, 1]\n",
        )
        .unwrap();
        let e = init_prior("x", &table);
        assert_eq!(e.softness.probs(), [0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(e.moisture, Categorical::point(PropertyLevel::new(2).unwrap()));
        assert_eq!(e.viscosity, Categorical::uniform());
    }

    #[test]
    fn every_registry_label_has_a_prior_row() {
        let table = PriorTable::default();
        for label in crate::model::FoodRegistry::default().labels() {
            assert!(table.row(label).is_some(), "{label}");
        }
    }

    #[test]
    fn no_history_equals_init_prior() {
        let table = PriorTable::default();
        let b = transfer_prior(&Belief::default(), ItemId(1), "carrot", &[], &table, 0.7).unwrap();
        assert_eq!(b.get(ItemId(1)).unwrap(), &init_prior("carrot", &table));
    }

    #[test]
    fn zero_blend_equals_table_prior() {
        let table = PriorTable::default();
        let belief = Belief::default().with_entry(ItemId(0), refined_point("carrot", 1));
        let b = transfer_prior(&belief, ItemId(1), "carrot", &[record(0, "carrot")], &table, 0.0).unwrap();
        let e = b.get(ItemId(1)).unwrap();
        let prior = init_prior("carrot", &table);
        for p in Property::ALL {
            assert_eq!(e.get(p), prior.get(p));
        }
    }

    #[test]
    fn full_blend_copies_point_mass() {
        let table = PriorTable::default();
        let belief = Belief::default().with_entry(ItemId(0), refined_point("carrot", 2));
        let b = transfer_prior(&belief, ItemId(1), "carrot", &[record(0, "carrot")], &table, 1.0).unwrap();
        let e = b.get(ItemId(1)).unwrap();
        assert_eq!(e.provenance, Provenance::Transferred);
        for p in Property::ALL {
            assert_eq!(*e.get(p), Categorical::point(PropertyLevel::new(2).unwrap()));
        }
    }

    #[test]
    fn shared_tag_transfers_and_unrefined_items_do_not() {
        let table = PriorTable::default();
        let mut prior_only = refined_point("watermelon", 3);
        prior_only.provenance = Provenance::Prior;
        let belief = Belief::default().with_entry(ItemId(0), prior_only);
        let b = transfer_prior(&belief, ItemId(1), "cantaloupe", &[record(0, "watermelon")], &table, 1.0).unwrap();
        assert_eq!(b.get(ItemId(1)).unwrap().provenance, Provenance::Prior);

        let belief = Belief::default().with_entry(ItemId(0), refined_point("watermelon", 3));
        let b = transfer_prior(&belief, ItemId(1), "cantaloupe", &[record(0, "watermelon")], &table, 1.0).unwrap();
        assert_eq!(b.get(ItemId(1)).unwrap().provenance, Provenance::Transferred);
    }

    #[test]
    fn existing_item_and_bad_blend_rejected() {
        let table = PriorTable::default();
        let belief = Belief::default().with_entry(ItemId(0), refined_point("carrot", 2));
        assert!(transfer_prior(&belief, ItemId(0), "carrot", &[], &table, 0.5).is_err());
        assert!(transfer_prior(&belief, ItemId(1), "carrot", &[], &table, 1.5).is_err());
    }
}
