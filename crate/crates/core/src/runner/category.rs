use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::Skill;

pub const CATEGORY_TABLE_SCHEMA_VERSION: u32 = 1;

const DEFAULT_CATEGORY_TABLE: &str = include_str!("../../assets/category_skills.toml");

/// Fixed label-to-skill lookup used by the category baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryTable {
    default: Vec<Skill>,
    label: BTreeMap<String, Vec<Skill>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryDocument {
    schema_version: u32,
    default: Vec<Skill>,
    #[serde(default)]
    label: BTreeMap<String, Vec<Skill>>,
}

impl CategoryTable {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: CategoryDocument = toml::from_str(text)?;
        if doc.schema_version != CATEGORY_TABLE_SCHEMA_VERSION {
            return Err(Error::Schema {
                document: "category table".into(),
                found: doc.schema_version,
                expected: CATEGORY_TABLE_SCHEMA_VERSION,
            });
        }
        if doc.default.is_empty() || doc.label.values().any(Vec::is_empty) {
            return Err(Error::Config("category table rows must list at least one skill".into()));
        }
        Ok(Self { default: doc.default, label: doc.label })
    }

    /// Skill for the `attempt_index`-th (1-based) attempt on `label`.
    pub fn skill_for(&self, label: &str, attempt_index: u32) -> Skill {
        let row = self.label.get(label).unwrap_or(&self.default);
        let i = (attempt_index.max(1) as usize - 1).min(row.len() - 1);
        row[i]
    }
}

impl Default for CategoryTable {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_CATEGORY_TABLE).expect("bundled category table is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_repeats_last_entry() {
        let t = CategoryTable::default();
        assert_eq!(t.skill_for("banana", 1), Skill::Cut);
        assert_eq!(t.skill_for("banana", 2), Skill::Skewer);
        assert_eq!(t.skill_for("banana", 3), Skill::Skewer);
        assert_eq!(t.skill_for("unlisted", 2), Skill::Skewer);
    }

    #[test]
    fn covers_registry() {
        let t = CategoryTable::default();
        for label in crate::model::FoodRegistry::default().labels() {
            assert!(t.label.contains_key(label), "{label}");
        }
    }

    #[test]
    fn empty_rows_rejected() {
        assert!(CategoryTable::from_toml_str("schema_version = 1\ndefault = []\n").is_err());
        assert!(CategoryTable::from_toml_str("schema_version = 2\ndefault = [\"skewer\"]\n").is_err());
    }
}
