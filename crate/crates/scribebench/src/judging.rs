//! LLM-as-judge orchestration: rubric prompt construction, single-pair
//! judging with one error-correcting re-ask, and resumable batch runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use scribebench_core::judge::{JudgeAssessment, JudgeParseError, parse_judge_response};
use scribebench_core::report::JudgedRow;

use crate::client::{ChatClient, ChatMessage, ChatRequest, ClientConfig, ClientError};
use crate::dataset::write_jsonl;
use crate::generator::{BatchReport, parallel_map};

pub const DEFAULT_JUDGE_MODEL: &str = "gpt-4.1-mini-2025-04-14";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeConfig {
    pub client: ClientConfig,
    pub judge_model: String,
    pub temperature: f64,
    /// Judge with the source transcript in view, so hallucination and
    /// omission are grounded in the conversation rather than the reference.
    pub include_transcript: bool,
    pub max_reasks: u32,
    pub max_tokens: u32,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            client: ClientConfig::default(),
            judge_model: DEFAULT_JUDGE_MODEL.into(),
            temperature: 0.0,
            include_transcript: true,
            max_reasks: 1,
            max_tokens: 1024,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error("{which} is empty")]
    EmptyDocument { which: &'static str },
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("judge response unusable after {attempts} attempt(s): {last}")]
    Parse {
        attempts: u32,
        last: JudgeParseError,
    },
}

const RUBRIC: &str = r#"Score each dimension from 1 to 5 using these anchors:
- factual_correctness — 1: multiple statements contradict the source; 3: mostly accurate with a few minor errors; 5: every statement is supported by the source.
- completeness — 1: most clinically relevant content is missing; 3: main findings covered but secondary details dropped; 5: all clinically relevant content captured.
- clinical_relevance — 1: dominated by irrelevant or filler content; 3: mostly relevant with some noise; 5: every statement is clinically pertinent.
- coherence_organization — 1: disorganized and hard to follow; 3: understandable but unevenly structured; 5: logically ordered, cleanly sectioned.
- terminology_accuracy — 1: medical terms frequently misused; 3: generally correct terminology with occasional slips; 5: precise standard terminology throughout.
- readability — 1: garbled or barely readable; 3: readable with awkward passages; 5: clear, fluent clinical prose.
- overall_quality — 1: unusable as documentation; 3: usable after substantial editing; 5: ready to file with at most trivial edits.

Also report:
- negation_detection (boolean): true only if negated findings in the source (for example "no chest pain", "denies fever") are preserved without being dropped or inverted.
- hallucination (No | Minor | Major): content in the candidate note that is not supported by the SOURCE. Minor: incidental, would not change care. Major: could mislead clinical care.
- omission (No | Minor | Major): clinically significant SOURCE content missing from the candidate note. Minor: peripheral detail. Major: care-relevant finding, medication, lab, or instruction."#;

const OUTPUT_SPEC: &str = r#"Respond with a single JSON object containing exactly these fields and nothing else:
{"factual_correctness": 1-5, "completeness": 1-5, "clinical_relevance": 1-5, "coherence_organization": 1-5, "terminology_accuracy": 1-5, "readability": 1-5, "overall_quality": 1-5, "negation_detection": true|false, "hallucination": "No"|"Minor"|"Major", "omission": "No"|"Minor"|"Major", "rationale": "one short paragraph"}"#;

/// Builds the judge conversation. The system message carries the rubric with
/// anchor descriptions; the user message carries the documents. Hallucination
/// and omission are grounded in the transcript when present, otherwise in the
/// reference note.
pub fn build_judge_prompt(
    transcript: Option<&str>,
    reference_note: &str,
    candidate_note: &str,
    config: &JudgeConfig,
) -> Result<Vec<ChatMessage>, JudgeError> {
    if candidate_note.trim().is_empty() {
        return Err(JudgeError::EmptyDocument {
            which: "candidate note",
        });
    }
    if reference_note.trim().is_empty() {
        return Err(JudgeError::EmptyDocument {
            which: "reference note",
        });
    }
    let _ = config;
    let source = if transcript.is_some() {
        "The SOURCE is the visit transcript; the reference note shows the expected documentation."
    } else {
        "No transcript is available; the SOURCE is the reference note."
    };
    let system = format!(
        "You evaluate AI-generated clinical notes against their source. {source}\n\n{RUBRIC}\n\n{OUTPUT_SPEC}"
    );
    let mut user = String::new();
    if let Some(transcript) = transcript {
        user.push_str("TRANSCRIPT:\n");
        user.push_str(transcript);
        user.push_str("\n\n");
    }
    user.push_str("REFERENCE NOTE:\n");
    user.push_str(reference_note);
    user.push_str("\n\nCANDIDATE NOTE:\n");
    user.push_str(candidate_note);
    Ok(vec![ChatMessage::system(system), ChatMessage::user(user)])
}

/// Everything the judge needs for one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeInput {
    pub id: String,
    pub model: String,
    pub transcript: Option<String>,
    pub reference_note: String,
    pub candidate_note: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeVerdict {
    pub assessment: JudgeAssessment,
    pub reask_count: u32,
}

/// Judges one record at temperature 0. A response that fails strict parsing
/// triggers one re-ask carrying the parse error; a second failure is a
/// permanent per-record error.
pub fn judge_pair(
    input: &JudgeInput,
    config: &JudgeConfig,
    client: &ChatClient,
) -> Result<JudgeVerdict, JudgeError> {
    let messages = build_judge_prompt(
        input.transcript.as_deref(),
        &input.reference_note,
        &input.candidate_note,
        config,
    )?;
    let request = ChatRequest {
        model: config.judge_model.clone(),
        messages,
        temperature: config.temperature,
        max_tokens: config.max_tokens,
        seed: None,
        force_structured_output: true,
    };
    let mut current = request.clone();
    let mut reask_count = 0u32;
    loop {
        let response = client.chat(&current)?;
        match parse_judge_response(&response.content) {
            Ok(assessment) => {
                return Ok(JudgeVerdict {
                    assessment,
                    reask_count,
                });
            }
            Err(error) if reask_count < config.max_reasks => {
                reask_count += 1;
                let mut messages = current.messages.clone();
                messages.push(ChatMessage::assistant(response.content.clone()));
                messages.push(ChatMessage::user(format!(
                    "Your previous response could not be parsed: {error}. Respond again with only the corrected JSON object containing exactly the required fields."
                )));
                current = ChatRequest {
                    messages,
                    ..request.clone()
                };
            }
            Err(error) => {
                return Err(JudgeError::Parse {
                    attempts: reask_count + 1,
                    last: error,
                });
            }
        }
    }
}

/// Judges records concurrently, preserving input order in the output file.
/// Successes are written even when some records permanently fail; failures
/// are listed in the report for the caller to surface.
pub fn judge_batch(
    inputs: &[JudgeInput],
    config: &JudgeConfig,
    client: &ChatClient,
    out_path: &Path,
) -> Result<BatchReport, std::io::Error> {
    let results = parallel_map(inputs, client.config().max_concurrency, |_, input| {
        judge_pair(input, config, client)
            .map(|verdict| {
                JudgedRow::from_assessment(
                    input.id.clone(),
                    input.model.clone(),
                    &verdict.assessment,
                    verdict.reask_count,
                )
            })
            .map_err(|error| (input.id.clone(), error.to_string()))
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(row) => rows.push(row),
            Err(failure) => failures.push(failure),
        }
    }
    write_jsonl(out_path, &rows)?;
    Ok(BatchReport {
        total: inputs.len(),
        written: rows.len(),
        failures,
    })
}
