//! Line-delimited record files: loading with validation (unique ids,
//! required fields, per-line error positions) and deterministic writing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use scribebench_core::note::TranscriptRecord;
use scribebench_core::report::{JudgedRow, ScoreRow};

use crate::util::write_atomic;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: duplicate id `{id}` at lines {first_line} and {line}")]
    DuplicateId {
        path: PathBuf,
        id: String,
        first_line: usize,
        line: usize,
    },
    #[error("{path}:{line}: invalid record: {message}")]
    InvalidRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Records plus non-fatal warnings (for example an empty input file).
#[derive(Debug)]
pub struct LoadOutcome<T> {
    pub records: Vec<T>,
    pub warnings: Vec<String>,
}

/// Anything with a unique id living in a record file.
pub trait RecordId {
    fn record_id(&self) -> &str;
    fn check(&self) -> Result<(), String> {
        if self.record_id().trim().is_empty() {
            return Err("field `id` is empty".into());
        }
        Ok(())
    }
}

impl RecordId for TranscriptRecord {
    fn record_id(&self) -> &str {
        &self.id
    }

    fn check(&self) -> Result<(), String> {
        self.validate().map_err(|e| e.to_string())
    }
}

/// A reference note line: `{"id": ..., "note": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub id: String,
    pub note: String,
}

impl RecordId for ReferenceRecord {
    fn record_id(&self) -> &str {
        &self.id
    }

    fn check(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("field `id` is empty".into());
        }
        if self.note.trim().is_empty() {
            return Err("field `note` is empty".into());
        }
        Ok(())
    }
}

/// A generated candidate line. `model` carries the generation profile label;
/// the full profile is pinned by `gen_config_hash`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: String,
    pub model: String,
    pub note: String,
    pub gen_config_hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RecordId for CandidateRecord {
    fn record_id(&self) -> &str {
        &self.id
    }

    fn check(&self) -> Result<(), String> {
        for (name, value) in [
            ("id", &self.id),
            ("model", &self.model),
            ("gen_config_hash", &self.gen_config_hash),
        ] {
            if value.trim().is_empty() {
                return Err(format!("field `{name}` is empty"));
            }
        }
        Ok(())
    }
}

/// One record of a synthesized dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthRecord {
    pub id: String,
    pub transcript: String,
    pub note: String,
    pub critique_passed: bool,
    pub revisions: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RecordId for SynthRecord {
    fn record_id(&self) -> &str {
        &self.id
    }
}

impl RecordId for ScoreRow {
    fn record_id(&self) -> &str {
        &self.id
    }
}

impl RecordId for JudgedRow {
    fn record_id(&self) -> &str {
        &self.id
    }
}

/// Loads a line-delimited record file: one JSON object per line, unique ids,
/// per-record validation. Blank lines are skipped; an empty file yields an
/// empty list plus a warning.
pub fn load_records<T>(path: &Path) -> Result<LoadOutcome<T>, DatasetError>
where
    T: DeserializeOwned + RecordId,
{
    let text = fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut records: Vec<T> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(line).map_err(|e| DatasetError::MalformedLine {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        record
            .check()
            .map_err(|message| DatasetError::InvalidRecord {
                path: path.to_path_buf(),
                line: line_no,
                message,
            })?;
        if let Some(&first_line) = seen.get(record.record_id()) {
            return Err(DatasetError::DuplicateId {
                path: path.to_path_buf(),
                id: record.record_id().to_string(),
                first_line,
                line: line_no,
            });
        }
        seen.insert(record.record_id().to_string(), line_no);
        records.push(record);
    }
    if records.is_empty() {
        warnings.push(format!(
            "dataset file {} contains no records",
            path.display()
        ));
    }
    Ok(LoadOutcome { records, warnings })
}

pub fn load_transcripts(path: &Path) -> Result<LoadOutcome<TranscriptRecord>, DatasetError> {
    load_records(path)
}

pub fn load_references(path: &Path) -> Result<LoadOutcome<ReferenceRecord>, DatasetError> {
    load_records(path)
}

pub fn load_candidates(path: &Path) -> Result<LoadOutcome<CandidateRecord>, DatasetError> {
    load_records(path)
}

pub fn load_scores(path: &Path) -> Result<LoadOutcome<ScoreRow>, DatasetError> {
    load_records(path)
}

pub fn load_judged(path: &Path) -> Result<LoadOutcome<JudgedRow>, DatasetError> {
    load_records(path)
}

/// Canonical line-delimited serialization; the inverse of [`load_records`]
/// up to key order, and a fixed point under reload-and-rewrite.
pub fn to_jsonl<T: Serialize>(rows: &[T]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    write_atomic(path, to_jsonl(rows).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct ExternalScoreLine {
    id: String,
    metric: String,
    score: f64,
}

/// Reads `{"id","metric","score"}` lines, keeping rows whose metric matches.
/// Ids may be missing from the file;  a duplicate id for the same metric is
/// an error.
pub fn ingest_external_scores(
    path: &Path,
    metric_name: &str,
) -> Result<(BTreeMap<String, f64>, Vec<String>), DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    let mut lines_seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: ExternalScoreLine =
            serde_json::from_str(line).map_err(|e| DatasetError::MalformedLine {
                path: path.to_path_buf(),
                line: line_no,
                message: e.to_string(),
            })?;
        if row.id.trim().is_empty() {
            return Err(DatasetError::InvalidRecord {
                path: path.to_path_buf(),
                line: line_no,
                message: "field `id` is empty".into(),
            });
        }
        if !row.score.is_finite() {
            return Err(DatasetError::InvalidRecord {
                path: path.to_path_buf(),
                line: line_no,
                message: "field `score` is not finite".into(),
            });
        }
        if row.metric != metric_name {
            continue;
        }
        if let Some(&first_line) = lines_seen.get(&row.id) {
            return Err(DatasetError::DuplicateId {
                path: path.to_path_buf(),
                id: row.id,
                first_line,
                line: line_no,
            });
        }
        lines_seen.insert(row.id.clone(), line_no);
        scores.insert(row.id, row.score);
    }
    if scores.is_empty() {
        warnings.push(format!(
            "no `{metric_name}` scores found in {}",
            path.display()
        ));
    }
    Ok((scores, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use scribebench_core::note::SourceTag;

    fn write(path: &Path, text: &str) {
        fs::write(path, text).unwrap();
    }

    #[test]
    fn loads_transcripts_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        write(
            &path,
            "{\"id\":\"b\",\"transcript\":\"Doctor: hi\",\"source\":\"aci_bench\"}\n\
             {\"id\":\"a\",\"transcript\":\"Doctor: hello\",\"source\":\"internal_eval\"}\n",
        );
        let out = load_transcripts(&path).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].id, "b");
        assert_eq!(out.records[1].id, "a");
        assert_eq!(out.records[0].source, SourceTag::AciBench);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn duplicate_id_names_both_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        write(
            &path,
            "{\"id\":\"x\",\"transcript\":\"Doctor: a\",\"source\":\"other\"}\n\
             {\"id\":\"y\",\"transcript\":\"Doctor: b\",\"source\":\"other\"}\n\
             {\"id\":\"x\",\"transcript\":\"Doctor: c\",\"source\":\"other\"}\n",
        );
        match load_transcripts(&path).unwrap_err() {
            DatasetError::DuplicateId {
                id,
                first_line,
                line,
                ..
            } => {
                assert_eq!(id, "x");
                assert_eq!(first_line, 1);
                assert_eq!(line, 3);
            }
            other => panic!("expected DuplicateId, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        write(&path, "{\"id\":\"x\",\"source\":\"other\"}\n");
        match load_transcripts(&path).unwrap_err() {
            DatasetError::MalformedLine { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("transcript"), "{message}");
            }
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn blank_transcript_is_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        write(
            &path,
            "{\"id\":\"x\",\"transcript\":\"  \",\"source\":\"other\"}\n",
        );
        assert!(matches!(
            load_transcripts(&path).unwrap_err(),
            DatasetError::InvalidRecord { line: 1, .. }
        ));
    }

    #[test]
    fn loads_a_full_reference_set() {
        // Sized like the ACI-derived corpus: 140 reference pairs.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("refs.jsonl");
        let mut lines = String::new();
        for i in 0..140 {
            lines.push_str(&format!(
                "{{\"id\":\"aci-{i:03}\",\"note\":\"## Plan\\ncase {i}\"}}\n"
            ));
        }
        write(&path, &lines);
        let out = load_references(&path).unwrap();
        assert_eq!(out.records.len(), 140);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn empty_file_warns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        write(&path, "");
        let out = load_transcripts(&path).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn reload_then_rewrite_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let rows = vec![
            CandidateRecord {
                id: "a".into(),
                model: "m".into(),
                note: "## Plan\nrest\n".into(),
                gen_config_hash: "h".into(),
                warnings: vec!["truncated".into()],
            },
            CandidateRecord {
                id: "b".into(),
                model: "m".into(),
                note: String::new(),
                gen_config_hash: "h".into(),
                warnings: vec![],
            },
        ];
        write_jsonl(&path, &rows).unwrap();
        let first = fs::read_to_string(&path).unwrap();
        let reloaded = load_candidates(&path).unwrap().records;
        write_jsonl(&path, &reloaded).unwrap();
        let second = fs::read_to_string(&path).unwrap();
        assert_eq!(first, second);
        assert_eq!(rows, reloaded);
    }

    #[test]
    fn external_scores_filter_and_dedupe() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        write(
            &path,
            "{\"id\":\"a\",\"metric\":\"bleurt\",\"score\":0.41}\n\
             {\"id\":\"b\",\"metric\":\"other\",\"score\":0.9}\n\
             {\"id\":\"c\",\"metric\":\"bleurt\",\"score\":0.52}\n",
        );
        let (scores, warnings) = ingest_external_scores(&path, "bleurt").unwrap();
        assert_eq!(scores.len(), 2);
        assert_eq!(scores["a"], 0.41);
        assert!(!scores.contains_key("b"));
        assert!(warnings.is_empty());

        write(
            &path,
            "{\"id\":\"a\",\"metric\":\"bleurt\",\"score\":0.41}\n\
             {\"id\":\"a\",\"metric\":\"bleurt\",\"score\":0.42}\n",
        );
        match ingest_external_scores(&path, "bleurt").unwrap_err() {
            DatasetError::DuplicateId { id, .. } => assert_eq!(id, "a"),
            other => panic!("expected DuplicateId, got {other:?}"),
        }
    }

    #[test]
    fn external_scores_empty_warns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        write(&path, "");
        let (scores, warnings) = ingest_external_scores(&path, "bleurt").unwrap();
        assert!(scores.is_empty());
        assert_eq!(warnings.len(), 1);
    }
}
