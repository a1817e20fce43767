//! Transcript and structured-note domain types, the heading grammar, and
//! section normalization.
//!
//! A note is a flat sequence of sections. A heading line is either
//! `## Heading` or `**Heading:**` (trailing colon optional); everything else
//! is body text. Text before the first heading, or a note with no headings at
//! all, becomes a single pseudo-section headed [`BODY_HEADING`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Heading assigned to leading or headingless text.
pub const BODY_HEADING: &str = "BODY";

/// Provenance tag for a transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    InternalEval,
    AciBench,
    Synthetic,
    Other,
}

/// One physician-patient dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub id: String,
    pub transcript: String,
    pub source: SourceTag,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl TranscriptRecord {
    /// Checks the record invariants: non-empty id, non-blank transcript.
    pub fn validate(&self) -> Result<(), NoteError> {
        if self.id.trim().is_empty() {
            return Err(NoteError::EmptyField { field: "id" });
        }
        if self.transcript.trim().is_empty() {
            return Err(NoteError::EmptyField {
                field: "transcript",
            });
        }
        Ok(())
    }
}

/// A transcript joined with its reference note; the pair shares one id.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePair {
    pub id: String,
    pub transcript: TranscriptRecord,
    pub reference_note: StructuredNote,
}

impl ReferencePair {
    pub fn new(transcript: TranscriptRecord, reference_note: StructuredNote) -> Self {
        Self {
            id: transcript.id.clone(),
            transcript,
            reference_note,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NoteError {
    #[error("field `{field}` is empty")]
    EmptyField { field: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("schema has no canonical headings")]
    Empty,
    #[error("duplicate canonical heading `{0}`")]
    DuplicateCanonical(String),
    #[error("alias `{alias}` maps to both `{first}` and `{second}`")]
    AmbiguousAlias {
        alias: String,
        first: String,
        second: String,
    },
    #[error("alias `{alias}` targets unknown heading `{target}`")]
    UnknownAliasTarget { alias: String, target: String },
}

/// Fold a surface heading to its lookup key: lowercase, punctuation runs
/// collapsed to single spaces, outer whitespace dropped.
fn normalize_key(surface: &str) -> String {
    let mut out = String::new();
    let mut pending_gap = false;
    for ch in surface.chars() {
        if ch.is_alphanumeric() {
            if pending_gap && !out.is_empty() {
                out.push(' ');
            }
            pending_gap = false;
            for low in ch.to_lowercase() {
                out.push(low);
            }
        } else {
            pending_gap = true;
        }
    }
    out
}

/// Ordered canonical headings plus a case-insensitive alias table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionSchema {
    canonical: Vec<String>,
    // normalized surface (canonical or alias) -> index into `canonical`
    lookup: BTreeMap<String, usize>,
}

impl SectionSchema {
    pub fn new<S: AsRef<str>>(
        canonical: Vec<String>,
        aliases: &[(S, S)],
    ) -> Result<Self, SchemaError> {
        if canonical.is_empty() {
            return Err(SchemaError::Empty);
        }
        let mut lookup = BTreeMap::new();
        for (i, heading) in canonical.iter().enumerate() {
            let key = normalize_key(heading);
            if lookup.insert(key, i).is_some() {
                return Err(SchemaError::DuplicateCanonical(heading.clone()));
            }
        }
        for (alias, target) in aliases {
            let (alias, target) = (alias.as_ref(), target.as_ref());
            let target_idx = *lookup.get(&normalize_key(target)).ok_or_else(|| {
                SchemaError::UnknownAliasTarget {
                    alias: alias.to_string(),
                    target: target.to_string(),
                }
            })?;
            let key = normalize_key(alias);
            if let Some(&existing) = lookup.get(&key) {
                if existing != target_idx {
                    return Err(SchemaError::AmbiguousAlias {
                        alias: alias.to_string(),
                        first: canonical[existing].clone(),
                        second: canonical[target_idx].clone(),
                    });
                }
            } else {
                lookup.insert(key, target_idx);
            }
        }
        Ok(Self { canonical, lookup })
    }

    /// The default clinical section set. Overridable via config; see
    /// [`SchemaDef`] for the on-disk form.
    pub fn default_clinical() -> Self {
        let canonical = [
            "Chief Complaint",
            "History of Present Illness",
            "Review of Systems",
            "Past Medical History",
            "Medications",
            "Allergies",
            "Physical Examination",
            "Laboratory and Diagnostic Results",
            "Assessment",
            "Plan",
            "Follow-up",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let aliases = [
            ("CC", "Chief Complaint"),
            ("HPI", "History of Present Illness"),
            ("ROS", "Review of Systems"),
            ("PMH", "Past Medical History"),
            ("Meds", "Medications"),
            ("PE", "Physical Examination"),
            ("Physical Exam", "Physical Examination"),
            ("Labs", "Laboratory and Diagnostic Results"),
            ("Laboratory Results", "Laboratory and Diagnostic Results"),
            ("Diagnostic Results", "Laboratory and Diagnostic Results"),
            ("Impression", "Assessment"),
        ];
        Self::new(canonical, &aliases).expect("default schema is valid")
    }

    pub fn canonical_headings(&self) -> &[String] {
        &self.canonical
    }

    /// Case-insensitive, punctuation-stripped lookup through the alias map
    /// and the canonical list. `None` means unrecognized.
    pub fn normalize(&self, surface: &str) -> Option<&str> {
        self.lookup
            .get(&normalize_key(surface))
            .map(|&i| self.canonical[i].as_str())
    }
}

impl Default for SectionSchema {
    fn default() -> Self {
        Self::default_clinical()
    }
}

/// On-disk schema description: `{"sections":[{"canonical":..,"aliases":[..]}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaDef {
    pub sections: Vec<SchemaSectionDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaSectionDef {
    pub canonical: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

impl TryFrom<SchemaDef> for SectionSchema {
    type Error = SchemaError;

    fn try_from(def: SchemaDef) -> Result<Self, SchemaError> {
        let canonical: Vec<String> = def.sections.iter().map(|s| s.canonical.clone()).collect();
        let mut aliases: Vec<(String, String)> = Vec::new();
        for section in &def.sections {
            for alias in &section.aliases {
                aliases.push((alias.clone(), section.canonical.clone()));
            }
        }
        SectionSchema::new(canonical, &aliases)
    }
}

/// One section of a note. `heading` holds the canonical heading when
/// recognized, otherwise the verbatim surface heading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteSection {
    pub heading: String,
    pub body: String,
    pub recognized: bool,
}

/// A parsed note: ordered sections plus the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredNote {
    pub sections: Vec<NoteSection>,
    pub raw: String,
}

impl StructuredNote {
    pub fn parse(raw: &str, schema: &SectionSchema) -> Self {
        parse_note(raw, schema)
    }

    pub fn serialize(&self) -> String {
        serialize_note(self)
    }

    pub fn recognized_count(&self) -> usize {
        self.sections.iter().filter(|s| s.recognized).count()
    }
}

/// Matches the heading grammar `^\s*(##\s+(.+?)\s*|\*\*(.+?):?\*\*)\s*$` and
/// returns the captured surface heading.
pub fn heading_surface(line: &str) -> Option<&str> {
    let s = line.trim();
    if let Some(rest) = s.strip_prefix("##") {
        // `##` must be followed by whitespace, then non-empty content.
        let content = rest.trim_start();
        if content.len() == rest.len() || content.is_empty() {
            return None;
        }
        return Some(content);
    }
    if s.len() >= 5 && s.starts_with("**") && s.ends_with("**") {
        let inner = &s[2..s.len() - 2];
        // One trailing colon belongs to the marker, not the heading, unless
        // the heading would become empty.
        let surface = match inner.strip_suffix(':') {
            Some(stripped) if !stripped.is_empty() => stripped,
            _ => inner,
        };
        if !surface.is_empty() {
            return Some(surface);
        }
    }
    None
}

/// Spec'd lookup: canonical heading for a surface form, or `None` when the
/// schema does not recognize it.
pub fn normalize_heading<'a>(surface: &str, schema: &'a SectionSchema) -> Option<&'a str> {
    schema.normalize(surface)
}

// Split on `\n` and drop trailing `\r` runs, so CRLF input and stray
// carriage returns cannot break the parse/serialize fixed point: a parsed
// body never ends in `\r`, so serializing cannot manufacture a CRLF.
fn logical_lines(raw: &str) -> impl Iterator<Item = &str> {
    raw.split('\n').map(|line| line.trim_end_matches('\r'))
}

fn assemble_body(lines: &[&str]) -> String {
    let Some(start) = lines.iter().position(|l| !l.trim().is_empty()) else {
        return String::new();
    };
    let end = lines
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .expect("start exists, so end exists");
    lines[start..=end].join("\n")
}

fn push_section(
    sections: &mut Vec<NoteSection>,
    positions: &mut BTreeMap<String, usize>,
    heading: String,
    recognized: bool,
    body: String,
) {
    let key = normalize_key(&heading);
    if let Some(&at) = positions.get(&key) {
        // Duplicate heading: merge into the first occurrence, blank line
        // between the bodies.
        let existing = &mut sections[at].body;
        if existing.is_empty() {
            *existing = body;
        } else if !body.is_empty() {
            existing.push_str("\n\n");
            existing.push_str(&body);
        }
    } else {
        positions.insert(key, sections.len());
        sections.push(NoteSection {
            heading,
            body,
            recognized,
        });
    }
}

/// Parses note text into ordered sections. Total: any input yields a note;
/// degenerate input becomes a single unrecognized [`BODY_HEADING`] section.
pub fn parse_note(raw: &str, schema: &SectionSchema) -> StructuredNote {
    let mut sections: Vec<NoteSection> = Vec::new();
    let mut positions: BTreeMap<String, usize> = BTreeMap::new();
    let mut current: Option<(String, bool)> = None;
    let mut body_lines: Vec<&str> = Vec::new();

    for line in logical_lines(raw) {
        if let Some(surface) = heading_surface(line) {
            let body = assemble_body(&body_lines);
            body_lines.clear();
            match current.take() {
                Some((heading, recognized)) => {
                    push_section(&mut sections, &mut positions, heading, recognized, body);
                }
                None if !body.is_empty() => {
                    // Text before the first heading.
                    push_section(
                        &mut sections,
                        &mut positions,
                        BODY_HEADING.to_string(),
                        false,
                        body,
                    );
                }
                None => {}
            }
            current = match schema.normalize(surface) {
                Some(canonical) => Some((canonical.to_string(), true)),
                None => Some((surface.to_string(), false)),
            };
        } else {
            body_lines.push(line);
        }
    }

    let body = assemble_body(&body_lines);
    match current {
        Some((heading, recognized)) => {
            push_section(&mut sections, &mut positions, heading, recognized, body);
        }
        None => {
            // No headings anywhere: the whole text is one BODY section.
            push_section(
                &mut sections,
                &mut positions,
                BODY_HEADING.to_string(),
                false,
                body,
            );
        }
    }

    StructuredNote {
        sections,
        raw: raw.to_string(),
    }
}

/// Emits `## <heading>\n<body>\n\n` per section; the inverse of [`parse_note`]
/// on section structure.
pub fn serialize_note(note: &StructuredNote) -> String {
    let mut out = String::new();
    for section in &note.sections {
        out.push_str("## ");
        out.push_str(&section.heading);
        out.push('\n');
        out.push_str(&section.body);
        out.push_str("\n\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn schema() -> SectionSchema {
        SectionSchema::default_clinical()
    }

    #[test]
    fn heading_grammar_accepts_both_styles() {
        assert_eq!(
            heading_surface("## Chief Complaint"),
            Some("Chief Complaint")
        );
        assert_eq!(heading_surface("  ##   Plan   "), Some("Plan"));
        assert_eq!(heading_surface("**Assessment:**"), Some("Assessment"));
        assert_eq!(heading_surface("**Assessment**"), Some("Assessment"));
        assert_eq!(heading_surface("### Plan"), None);
        assert_eq!(heading_surface("##"), None);
        assert_eq!(heading_surface("## "), None);
        assert_eq!(heading_surface("plain text"), None);
        assert_eq!(heading_surface("**unclosed"), None);
        assert_eq!(heading_surface("****"), None);
    }

    #[test]
    fn parse_two_recognized_sections() {
        let note = parse_note(
            "## Chief Complaint\nFatigue.\n## Assessment\nHypothyroidism.",
            &schema(),
        );
        assert_eq!(note.sections.len(), 2);
        assert!(note.sections.iter().all(|s| s.recognized));
        assert_eq!(note.sections[0].heading, "Chief Complaint");
        assert_eq!(note.sections[0].body, "Fatigue.");
        assert_eq!(note.sections[1].heading, "Assessment");
        assert_eq!(note.sections[1].body, "Hypothyroidism.");
    }

    #[test]
    fn parse_prose_yields_single_body_section() {
        let note = parse_note("just prose, no headings", &schema());
        assert_eq!(note.sections.len(), 1);
        assert_eq!(note.sections[0].heading, BODY_HEADING);
        assert!(!note.sections[0].recognized);
        assert_eq!(note.sections[0].body, "just prose, no headings");
    }

    #[test]
    fn parse_empty_yields_single_body_section() {
        let note = parse_note("", &schema());
        assert_eq!(note.sections.len(), 1);
        assert_eq!(note.sections[0].heading, BODY_HEADING);
        assert_eq!(note.sections[0].body, "");
    }

    #[test]
    fn duplicate_canonical_headings_merge_in_place() {
        let note = parse_note(
            "## HPI\ntext\n## History of Present Illness\nmore",
            &schema(),
        );
        assert_eq!(note.sections.len(), 1);
        assert_eq!(note.sections[0].heading, "History of Present Illness");
        assert_eq!(note.sections[0].body, "text\n\nmore");
    }

    #[test]
    fn merge_keeps_first_occurrence_position() {
        let note = parse_note(
            "## Plan\nfirst\n## Assessment\nmiddle\n## Plan\nsecond",
            &schema(),
        );
        assert_eq!(note.sections.len(), 2);
        assert_eq!(note.sections[0].heading, "Plan");
        assert_eq!(note.sections[0].body, "first\n\nsecond");
        assert_eq!(note.sections[1].heading, "Assessment");
    }

    #[test]
    fn serialize_single_section() {
        let note = StructuredNote {
            sections: vec![NoteSection {
                heading: "Plan".to_string(),
                body: "Increase dose.".to_string(),
                recognized: true,
            }],
            raw: String::new(),
        };
        assert_eq!(serialize_note(&note), "## Plan\nIncrease dose.\n\n");
    }

    #[test]
    fn serialize_empty_note() {
        let note = StructuredNote {
            sections: vec![],
            raw: String::new(),
        };
        assert_eq!(serialize_note(&note), "");
    }

    #[test]
    fn round_trip_preserves_sections() {
        let texts = [
            "## Chief Complaint\nFatigue.\n## Assessment\nHypothyroidism.",
            "intro prose\n## Plan\nline one\n\nline two\n",
            "**Medications:**\nLevothyroxine 50 mcg\n## Starship Log\nunknown heading",
            "no headings at all",
            "",
        ];
        for raw in texts {
            let first = parse_note(raw, &schema());
            let second = parse_note(&serialize_note(&first), &schema());
            assert_eq!(
                first.sections, second.sections,
                "round trip failed for {raw:?}"
            );
        }
    }

    #[test]
    fn normalize_heading_examples() {
        let s = schema();
        assert_eq!(
            normalize_heading("HPI:", &s),
            Some("History of Present Illness")
        );
        assert_eq!(normalize_heading("ASSESSMENT", &s), Some("Assessment"));
        assert_eq!(normalize_heading("Starship Log", &s), None);
        assert_eq!(normalize_heading("follow up", &s), Some("Follow-up"));
    }

    #[test]
    fn schema_rejects_duplicates_and_bad_aliases() {
        let dup = SectionSchema::new(
            vec!["Plan".to_string(), "plan".to_string()],
            &[] as &[(&str, &str)],
        );
        assert_eq!(
            dup,
            Err(SchemaError::DuplicateCanonical("plan".to_string()))
        );

        let bad_target = SectionSchema::new(vec!["Plan".to_string()], &[("P", "Missing")]);
        assert!(matches!(
            bad_target,
            Err(SchemaError::UnknownAliasTarget { .. })
        ));

        let ambiguous = SectionSchema::new(
            vec!["Plan".to_string(), "Assessment".to_string()],
            &[("X", "Plan"), ("X", "Assessment")],
        );
        assert!(matches!(ambiguous, Err(SchemaError::AmbiguousAlias { .. })));
    }

    #[test]
    fn transcript_record_validation() {
        let mut rec = TranscriptRecord {
            id: "a1".to_string(),
            transcript: "Doctor: hi".to_string(),
            source: SourceTag::Other,
            metadata: BTreeMap::new(),
        };
        assert!(rec.validate().is_ok());
        rec.transcript = "   ".to_string();
        assert_eq!(
            rec.validate(),
            Err(NoteError::EmptyField {
                field: "transcript"
            })
        );
    }
}
