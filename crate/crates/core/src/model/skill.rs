use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Skill {
    Skewer,
    Scoop,
    Twirl,
    Dip,
    Push,
    Cut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkillKind {
    Acquisition,
    PreAcquisition,
}

impl Skill {
    pub const ALL: [Skill; 6] = [
        Skill::Skewer,
        Skill::Scoop,
        Skill::Twirl,
        Skill::Dip,
        Skill::Push,
        Skill::Cut,
    ];

    /// Acquisition skills in tie-break order.
    pub const ACQUISITION: [Skill; 4] = [Skill::Skewer, Skill::Scoop, Skill::Twirl, Skill::Dip];

    pub fn kind(self) -> SkillKind {
        match self {
            Skill::Skewer | Skill::Scoop | Skill::Twirl | Skill::Dip => SkillKind::Acquisition,
            Skill::Push | Skill::Cut => SkillKind::PreAcquisition,
        }
    }

    pub fn is_acquisition(self) -> bool {
        self.kind() == SkillKind::Acquisition
    }

    pub fn index(self) -> usize {
        Skill::ALL.iter().position(|s| *s == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Skill::Skewer => "skewer",
            Skill::Scoop => "scoop",
            Skill::Twirl => "twirl",
            Skill::Dip => "dip",
            Skill::Push => "push",
            Skill::Cut => "cut",
        }
    }

    pub fn title(self) -> String {
        crate::model::property::capitalize(self.name())
    }

    pub fn description(self) -> &'static str {
        match self {
            Skill::Skewer => "skewer: pierce the item from above with the fork tines and lift it.",
            Skill::Scoop => "scoop: slide the fork under the item with the tines flat and lift it.",
            Skill::Twirl => "twirl: insert the tines into a noodle pile and rotate to wrap strands before lifting.",
            Skill::Dip => "dip: pick up the item and dip it into an accompanying sauce before lifting.",
            Skill::Push => "push: push the item against a neighbor or the plate rim to brace it for a later acquisition.",
            Skill::Cut => "cut: press the fork edge down through a large item to split off a bite-sized piece.",
        }
    }
}

impl fmt::Display for Skill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Skill {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned = s.trim().trim_matches(|c: char| c == '\'' || c == '"' || c == '.').to_ascii_lowercase();
        Skill::ALL
            .into_iter()
            .find(|skill| skill.name() == cleaned)
            .ok_or_else(|| Error::UnknownSkill(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_follows_name() {
        for skill in Skill::ACQUISITION {
            assert_eq!(skill.kind(), SkillKind::Acquisition);
        }
        assert_eq!(Skill::Push.kind(), SkillKind::PreAcquisition);
        assert_eq!(Skill::Cut.kind(), SkillKind::PreAcquisition);
    }

    #[test]
    fn parse_round_trips_names() {
        for skill in Skill::ALL {
            assert_eq!(skill.name().parse::<Skill>().unwrap(), skill);
        }
        assert_eq!("'Scoop'".parse::<Skill>().unwrap(), Skill::Scoop);
        assert!("stab".parse::<Skill>().is_err());
    }
}
