use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PropertyLevel, Shape, Size};

const PROPERTY_PROMPT: &str = include_str!("../../assets/prompts/property_estimation.txt");
const IMAGE_PLACEHOLDER: &str = "<Image on the target food item>";

/// Property-estimation query for a remote vision-language backend.
pub fn build_property_prompt(label: &str, image_ref: &str) -> String {
    let image = if image_ref.is_empty() { IMAGE_PLACEHOLDER.to_string() } else { format!("<Image: {image_ref}>") };
    PROPERTY_PROMPT.replace("{image}", &image).replace("{food}", label)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyAnswer {
    pub shape: Shape,
    pub size: Size,
    pub softness: PropertyLevel,
    pub moisture: PropertyLevel,
    pub viscosity: PropertyLevel,
}

fn score(field: &str, value: &str) -> Result<PropertyLevel> {
    let v: f64 = value
        .trim()
        .trim_end_matches('.')
        .parse()
        .map_err(|_| Error::Parse(format!("{field}: `{value}` is not a score")))?;
    if !(0.0..=5.0).contains(&v) {
        return Err(Error::Parse(format!("{field}: score {v} outside 0..5")));
    }
    // The query allows 0; it folds into level 1.
    Ok(PropertyLevel::clamped(v))
}

/// Parses the last `Answer:` line of a property-estimation reply.
pub fn parse_property_answer(text: &str) -> Result<PropertyAnswer> {
    let start = text.rfind("Answer:").ok_or_else(|| Error::Parse("reply has no `Answer:`".into()))?;
    let line = text[start + "Answer:".len()..].lines().next().unwrap_or("");
    let mut shape = None;
    let mut size = None;
    let mut levels = [None; 3];
    for part in line.split(';') {
        let Some((key, value)) = part.split_once(':') else { continue };
        let value = value.trim();
        match key.trim().to_ascii_lowercase().as_str() {
            "shape" => shape = Shape::parse(value),
            "size" => size = Size::parse(value),
            "softness" => levels[0] = Some(score("softness", value)?),
            "moisture" => levels[1] = Some(score("moisture", value)?),
            "viscosity" => levels[2] = Some(score("viscosity", value)?),
            _ => {}
        }
    }
    let missing = |what: &str| Error::Parse(format!("reply answer lacks a usable {what}"));
    Ok(PropertyAnswer {
        shape: shape.ok_or_else(|| missing("shape"))?,
        size: size.ok_or_else(|| missing("size"))?,
        softness: levels[0].ok_or_else(|| missing("softness"))?,
        moisture: levels[1].ok_or_else(|| missing("moisture"))?,
        viscosity: levels[2].ok_or_else(|| missing("viscosity"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_contains_answer_format_line() {
        let text = build_property_prompt("tofu", "");
        assert!(text.contains("This is a plate of tofu."));
        assert!(text.contains("Answer: Shape: <shape> ; Size: <size>; Softness: <softness score>"));
        assert_eq!(text, build_property_prompt("tofu", ""));
    }

    #[test]
    fn empty_label_still_renders() {
        let text = build_property_prompt("", "img/7.png");
        assert!(text.starts_with("<Image: img/7.png>\nThis is a plate of ."));
        assert!(text.contains("Always follow this format:"));
    }

    #[test]
    fn parses_answer_line() {
        let reply = "Reasoning: soft.\nAnswer: Shape: Cubic ; Size: bite-sized; Softness: 4; Moisture: 3; Viscosity: 2";
        let a = parse_property_answer(reply).unwrap();
        assert_eq!(a.shape, Shape::Cubic);
        assert_eq!(a.size, Size::BiteSized);
        assert_eq!([a.softness.value(), a.moisture.value(), a.viscosity.value()], [4, 3, 2]);
    }

    #[test]
    fn zero_score_folds_to_level_one_and_garbage_fails() {
        let a = parse_property_answer("Answer: Shape: round; Size: large; Softness: 0; Moisture: 5; Viscosity: 1").unwrap();
        assert_eq!(a.softness.value(), 1);
        assert!(parse_property_answer("no answer here").is_err());
        assert!(parse_property_answer("Answer: Shape: round; Size: large; Softness: 9; Moisture: 5; Viscosity: 1").is_err());
        assert!(parse_property_answer("Answer: Shape: blob; Size: large; Softness: 2; Moisture: 5; Viscosity: 1").is_err());
    }
}
