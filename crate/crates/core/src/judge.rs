//! Judge-assessment types and strict parsing of the judge model's structured
//! output: seven 1-5 rubric dimensions, a binary negation-preservation flag,
//! and graded hallucination/omission severities.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The seven Likert dimensions, in rubric order.
pub const LIKERT_DIMENSIONS: [&str; 7] = [
    "factual_correctness",
    "completeness",
    "clinical_relevance",
    "coherence_organization",
    "terminology_accuracy",
    "readability",
    "overall_quality",
];

/// A 1-5 rating. Construction and deserialization both enforce the range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LikertScore(u8);

impl LikertScore {
    pub fn new(value: i64) -> Result<Self, JudgeParseError> {
        if (1..=5).contains(&value) {
            Ok(Self(value as u8))
        } else {
            Err(JudgeParseError::OutOfRange {
                field: String::new(),
                value,
            })
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl Serialize for LikertScore {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for LikertScore {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        LikertScore::new(raw).map_err(|_| D::Error::custom("Likert score outside 1..=5"))
    }
}

/// Graded severity for hallucinations and omissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SeverityCategory {
    No,
    Minor,
    Major,
}

impl SeverityCategory {
    /// Case-insensitive parse of `no` / `minor` / `major`.
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_lowercase().as_str() {
            "no" => Some(Self::No),
            "minor" => Some(Self::Minor),
            "major" => Some(Self::Major),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::No => "no",
            Self::Minor => "minor",
            Self::Major => "major",
        }
    }
}

impl Serialize for SeverityCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SeverityCategory {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Self::parse(&raw).ok_or_else(|| D::Error::custom("expected no, minor, or major"))
    }
}

/// One complete judge verdict for a candidate note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeAssessment {
    pub factual_correctness: LikertScore,
    pub completeness: LikertScore,
    pub clinical_relevance: LikertScore,
    pub coherence_organization: LikertScore,
    pub terminology_accuracy: LikertScore,
    pub readability: LikertScore,
    pub overall_quality: LikertScore,
    pub negation_detection: bool,
    pub hallucination: SeverityCategory,
    pub omission: SeverityCategory,
    pub rationale: String,
}

impl JudgeAssessment {
    pub fn likert_values(&self) -> [u8; 7] {
        [
            self.factual_correctness.value(),
            self.completeness.value(),
            self.clinical_relevance.value(),
            self.coherence_organization.value(),
            self.terminology_accuracy.value(),
            self.readability.value(),
            self.overall_quality.value(),
        ]
    }
}

/// Unweighted mean of the seven Likert dimensions; always in [1, 5].
pub fn composite_score(assessment: &JudgeAssessment) -> f64 {
    let sum: u32 = assessment
        .likert_values()
        .iter()
        .map(|&v| u32::from(v))
        .sum();
    f64::from(sum) / 7.0
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JudgeParseError {
    #[error("response is not a JSON object: {0}")]
    NotAnObject(String),
    #[error("missing field `{field}`")]
    MissingField { field: String },
    #[error("field `{field}` out of range: {value}")]
    OutOfRange { field: String, value: i64 },
    #[error("field `{field}` has an invalid value")]
    InvalidValue { field: String },
    #[error("field `{field}` has unrecognized severity `{value}`")]
    InvalidSeverity { field: String, value: String },
}

// Models wrap JSON in prose or markdown fences often enough to be worth a
// tolerant extraction pass before strict parsing.
fn extract_json(text: &str) -> &str {
    let trimmed = text.trim();
    match (trimmed.find('{'), trimmed.rfind('}')) {
        (Some(start), Some(end)) if start < end => &trimmed[start..=end],
        _ => trimmed,
    }
}

fn integer_field(
    obj: &serde_json::Map<String, serde_json::Value>,
    field: &str,
) -> Result<i64, JudgeParseError> {
    let value = obj
        .get(field)
        .ok_or_else(|| JudgeParseError::MissingField {
            field: field.to_owned(),
        })?;
    if let Some(n) = value.as_i64() {
        return Ok(n);
    }
    // Accept integral floats such as 4.0.
    if let Some(f) = value.as_f64()
        && ((i64::MIN as f64)..=(i64::MAX as f64)).contains(&f)
        && (f as i64) as f64 == f
    {
        return Ok(f as i64);
    }
    Err(JudgeParseError::InvalidValue {
        field: field.to_owned(),
    })
}

fn likert_field(
    obj: &serde_json::Map<String, serde_json::Value>,
    field: &str,
) -> Result<LikertScore, JudgeParseError> {
    let raw = integer_field(obj, field)?;
    LikertScore::new(raw).map_err(|_| JudgeParseError::OutOfRange {
        field: field.to_owned(),
        value: raw,
    })
}

fn severity_field(
    obj: &serde_json::Map<String, serde_json::Value>,
    field: &str,
) -> Result<SeverityCategory, JudgeParseError> {
    let value = obj
        .get(field)
        .ok_or_else(|| JudgeParseError::MissingField {
            field: field.to_owned(),
        })?;
    let text = value
        .as_str()
        .ok_or_else(|| JudgeParseError::InvalidValue {
            field: field.to_owned(),
        })?;
    SeverityCategory::parse(text).ok_or_else(|| JudgeParseError::InvalidSeverity {
        field: field.to_owned(),
        value: text.to_owned(),
    })
}

/// Parses the judge model's wire response into an assessment, enforcing
/// presence and ranges of all ten assessment fields. A missing rationale
/// defaults to empty.
pub fn parse_judge_response(text: &str) -> Result<JudgeAssessment, JudgeParseError> {
    let value: serde_json::Value = serde_json::from_str(extract_json(text))
        .map_err(|e| JudgeParseError::NotAnObject(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| {
        JudgeParseError::NotAnObject("top-level value is not an object".to_string())
    })?;

    // Fields checked in rubric order so errors name the first offender.
    let factual_correctness = likert_field(obj, "factual_correctness")?;
    let completeness = likert_field(obj, "completeness")?;
    let clinical_relevance = likert_field(obj, "clinical_relevance")?;
    let coherence_organization = likert_field(obj, "coherence_organization")?;
    let terminology_accuracy = likert_field(obj, "terminology_accuracy")?;
    let readability = likert_field(obj, "readability")?;
    let overall_quality = likert_field(obj, "overall_quality")?;
    let negation_detection = obj
        .get("negation_detection")
        .ok_or_else(|| JudgeParseError::MissingField {
            field: "negation_detection".to_string(),
        })?
        .as_bool()
        .ok_or_else(|| JudgeParseError::InvalidValue {
            field: "negation_detection".to_string(),
        })?;

    Ok(JudgeAssessment {
        factual_correctness,
        completeness,
        clinical_relevance,
        coherence_organization,
        terminology_accuracy,
        readability,
        overall_quality,
        negation_detection,
        hallucination: severity_field(obj, "hallucination")?,
        omission: severity_field(obj, "omission")?,
        rationale: obj
            .get("rationale")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_owned(),
    })
}
