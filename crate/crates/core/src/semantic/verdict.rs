use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::ts::ComovementSign;

/// Ordinal plausibility level; the numeric score used for re-ranking is `0..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    None,
    Weak,
    Moderate,
    Strong,
}

impl Strength {
    pub const ALL: [Strength; 4] = [Strength::None, Strength::Weak, Strength::Moderate, Strength::Strong];

    pub fn score(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strength::None => "none",
            Strength::Weak => "weak",
            Strength::Moderate => "moderate",
            Strength::Strong => "strong",
        }
    }
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strength {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Strength::None),
            "weak" => Ok(Strength::Weak),
            "moderate" => Ok(Strength::Moderate),
            "strong" => Ok(Strength::Strong),
            other => Err(Error::SchemaViolation(format!("unknown strength {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticVerdict {
    pub plausible: bool,
    pub strength: Strength,
    pub expected_sign: ComovementSign,
    pub rationale: String,
    pub raw_response: String,
}

impl SemanticVerdict {
    /// Bottom-score verdict recorded for a pair whose scoring failed.
    pub fn failed(reason: &str) -> Self {
        Self {
            plausible: false,
            strength: Strength::None,
            expected_sign: ComovementSign::Positive,
            rationale: format!("scoring failed: {reason}"),
            raw_response: String::new(),
        }
    }

    /// The structured fields as the JSON object a model is asked to return.
    pub fn to_response_json(&self) -> String {
        serde_json::json!({
            "plausible": self.plausible,
            "strength": self.strength.as_str(),
            "expected_sign": self.expected_sign.value(),
            "rationale": self.rationale,
        })
        .to_string()
    }
}

/// Removes a surrounding ``` fence (with optional language tag) if present.
fn strip_fences(text: &str) -> &str {
    let Some(open) = text.find("```") else {
        return text;
    };
    let after = &text[open + 3..];
    // Skip the info string on the opening fence line.
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    }
}

fn first_json_object(text: &str) -> Option<Map<String, Value>> {
    text.match_indices('{').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) => Some(map),
            _ => None,
        }
    })
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::SchemaViolation(format!("missing field {name:?}")))
}

/// Extracts and validates the first JSON verdict object in a model response.
pub fn parse_verdict(response_text: &str) -> Result<SemanticVerdict> {
    let obj = first_json_object(strip_fences(response_text))
        .or_else(|| first_json_object(response_text))
        .ok_or_else(|| {
            let preview: String = response_text.chars().take(80).collect();
            Error::MalformedResponse(format!("no JSON object in response {preview:?}"))
        })?;

    let plausible = field(&obj, "plausible")?
        .as_bool()
        .ok_or_else(|| Error::SchemaViolation("\"plausible\" must be a boolean".into()))?;
    let strength: Strength = field(&obj, "strength")?
        .as_str()
        .ok_or_else(|| Error::SchemaViolation("\"strength\" must be a string".into()))?
        .parse()?;
    let expected_sign = match field(&obj, "expected_sign")?.as_i64() {
        Some(1) => ComovementSign::Positive,
        Some(-1) => ComovementSign::Negative,
        _ => {
            return Err(Error::SchemaViolation(
                "\"expected_sign\" must be the integer 1 or -1".into(),
            ))
        }
    };
    let rationale = field(&obj, "rationale")?
        .as_str()
        .ok_or_else(|| Error::SchemaViolation("\"rationale\" must be a string".into()))?
        .to_string();
    if strength == Strength::None && plausible {
        return Err(Error::SchemaViolation(
            "strength \"none\" requires plausible = false".into(),
        ));
    }
    Ok(SemanticVerdict {
        plausible,
        strength,
        expected_sign,
        rationale,
        raw_response: response_text.to_string(),
    })
}
