//! Candidate-note generation: prompt templates, single-record generation,
//! and resumable batch runs over a transcript dataset.

use std::path::Path;
use std::sync::Mutex;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use scribebench_core::note::{SectionSchema, StructuredNote, TranscriptRecord, parse_note};

use crate::client::{
    ChatClient, ChatMessage, ChatRequest, ClientConfig, ClientError, FinishReason,
};
use crate::dataset::{CandidateRecord, write_jsonl};
use crate::util::{fill_placeholders, placeholder_count, sha256_hex};

pub const DEFAULT_NOTE_TEMPLATE: &str = include_str!("../templates/note.txt");

/// One generation arm: an endpoint, a model, and its decoding settings. The
/// hash of all fields is stamped on every candidate as `gen_config_hash`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationProfile {
    pub profile_id: String,
    pub client: ClientConfig,
    pub model: String,
    pub prompt_template_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
}

impl GenerationProfile {
    pub fn new(
        profile_id: impl Into<String>,
        client: ClientConfig,
        model: impl Into<String>,
    ) -> Self {
        Self {
            profile_id: profile_id.into(),
            client,
            model: model.into(),
            prompt_template_id: "structured-note-v1".into(),
            temperature: 0.2,
            max_tokens: 1024,
            seed: None,
        }
    }

    /// Digest over every profile field; identical across a run, different
    /// between any two differing profiles.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("profile serializes");
        sha256_hex(canonical.as_bytes())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
    #[error("template missing `template_id:` front-matter line")]
    MissingTemplateId,
    #[error("template missing `{marker}` marker line")]
    MissingMarker { marker: &'static str },
    #[error("user text must contain {{{{transcript}}}} exactly once, found {found}")]
    PlaceholderCount { found: usize },
}

const SYSTEM_MARKER: &str = "--- system ---";
const USER_MARKER: &str = "--- user ---";

/// Splits a template file into (template_id, system text, user text).
pub(crate) fn parse_template_file(text: &str) -> Result<(String, String, String), TemplateError> {
    let mut lines = text.lines();
    let template_id = loop {
        match lines.next() {
            Some(line) if line.trim().is_empty() => continue,
            Some(line) => {
                let id = line
                    .strip_prefix("template_id:")
                    .ok_or(TemplateError::MissingTemplateId)?
                    .trim();
                if id.is_empty() {
                    return Err(TemplateError::MissingTemplateId);
                }
                break id.to_string();
            }
            None => return Err(TemplateError::MissingTemplateId),
        }
    };
    let rest: Vec<&str> = lines.collect();
    let system_at = rest.iter().position(|l| l.trim() == SYSTEM_MARKER).ok_or(
        TemplateError::MissingMarker {
            marker: SYSTEM_MARKER,
        },
    )?;
    let user_at =
        rest.iter()
            .position(|l| l.trim() == USER_MARKER)
            .ok_or(TemplateError::MissingMarker {
                marker: USER_MARKER,
            })?;
    if user_at < system_at {
        return Err(TemplateError::MissingMarker {
            marker: USER_MARKER,
        });
    }
    let system_text = rest[system_at + 1..user_at].join("\n").trim().to_string();
    let user_text = rest[user_at + 1..].join("\n").trim().to_string();
    Ok((template_id, system_text, user_text))
}

/// A generation prompt: front-matter id plus system and user texts. The user
/// text carries the `{{transcript}}` placeholder exactly once; `{{headings}}`
/// is bound to the schema's canonical list at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub template_id: String,
    pub system_text: String,
    pub user_text: String,
}

impl PromptTemplate {
    /// Parses the template file format:
    ///
    /// ```text
    /// template_id: my-template
    /// --- system ---
    /// ...
    /// --- user ---
    /// ... {{transcript}} ...
    /// ```
    pub fn parse(text: &str, schema: &SectionSchema) -> Result<Self, TemplateError> {
        let (template_id, system_text, user_text) = parse_template_file(text)?;
        Self::from_parts(template_id, system_text, user_text, schema)
    }

    pub fn from_parts(
        template_id: String,
        system_text: String,
        user_text: String,
        schema: &SectionSchema,
    ) -> Result<Self, TemplateError> {
        let headings = schema.canonical_headings().join(", ");
        let fill = [("headings", headings.as_str())];
        let system_text = fill_placeholders(&system_text, &fill);
        let user_text = fill_placeholders(&user_text, &fill);
        let found = placeholder_count(&user_text, "transcript");
        if found != 1 {
            return Err(TemplateError::PlaceholderCount { found });
        }
        Ok(Self {
            template_id,
            system_text,
            user_text,
        })
    }

    pub fn load(path: &Path, schema: &SectionSchema) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|e| TemplateError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, schema)
    }

    pub fn default_note(schema: &SectionSchema) -> Self {
        Self::parse(DEFAULT_NOTE_TEMPLATE, schema).expect("bundled template is valid")
    }

    pub fn render(&self, transcript: &str) -> Vec<ChatMessage> {
        render_prompt(self, transcript)
    }
}

/// Substitutes the transcript into the template; system message first. The
/// substitution is single-pass, so placeholder-looking text inside the
/// transcript stays literal.
pub fn render_prompt(template: &PromptTemplate, transcript: &str) -> Vec<ChatMessage> {
    let user = fill_placeholders(&template.user_text, &[("transcript", transcript)]);
    vec![
        ChatMessage::system(template.system_text.clone()),
        ChatMessage::user(user),
    ]
}

/// Candidate warning tokens.
pub const WARN_TRUNCATED: &str = "truncated";
pub const WARN_UNSTRUCTURED: &str = "no_recognized_sections";

#[derive(Debug, Clone)]
pub struct CandidateOutcome {
    pub record: CandidateRecord,
    pub parsed: StructuredNote,
}

/// Generates one candidate note. The raw model text is stored verbatim;
/// unparseable output is kept (it parses to a single BODY section) and
/// flagged.
pub fn generate_note(
    transcript: &TranscriptRecord,
    profile: &GenerationProfile,
    template: &PromptTemplate,
    client: &ChatClient,
    schema: &SectionSchema,
) -> Result<CandidateOutcome, ClientError> {
    let request = ChatRequest {
        model: profile.model.clone(),
        messages: template.render(&transcript.transcript),
        temperature: profile.temperature,
        max_tokens: profile.max_tokens,
        seed: profile.seed,
        force_structured_output: false,
    };
    let response = client.chat(&request)?;
    let parsed = parse_note(&response.content, schema);
    let mut warnings = Vec::new();
    if response.finish_reason == FinishReason::Length {
        warnings.push(WARN_TRUNCATED.to_string());
    }
    if parsed.recognized_count() == 0 {
        warnings.push(WARN_UNSTRUCTURED.to_string());
    }
    Ok(CandidateOutcome {
        record: CandidateRecord {
            id: transcript.id.clone(),
            model: profile.profile_id.clone(),
            note: response.content,
            gen_config_hash: profile.config_hash(),
            warnings,
        },
        parsed,
    })
}

#[derive(Debug)]
pub struct BatchReport {
    pub total: usize,
    pub written: usize,
    /// (record id, error) pairs for records that permanently failed.
    pub failures: Vec<(String, String)>,
}

impl BatchReport {
    pub fn failed_ids(&self) -> Vec<&str> {
        self.failures.iter().map(|(id, _)| id.as_str()).collect()
    }
}

/// Runs `items` through `work` on a bounded worker pool, preserving input
/// order in the results.
pub(crate) fn parallel_map<T, R, F>(items: &[T], workers: usize, work: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    if items.is_empty() {
        return Vec::new();
    }
    let workers = workers.clamp(1, items.len());
    let cursor = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                loop {
                    let index = cursor.fetch_add(1, Ordering::SeqCst);
                    if index >= items.len() {
                        break;
                    }
                    let result = work(index, &items[index]);
                    slots.lock().unwrap()[index] = Some(result);
                }
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every index was visited"))
        .collect()
}

/// Generates one candidate per transcript, in input order, running records
/// concurrently up to the client's `max_concurrency`. The output file is
/// written only when every record succeeded, so an existing output is always
/// complete; a partial run's responses stay in the client cache, making
/// reruns resumable. On failure the report lists the failed ids and no file
/// is written.
pub fn generate_batch(
    transcripts: &[TranscriptRecord],
    profile: &GenerationProfile,
    template: &PromptTemplate,
    client: &ChatClient,
    schema: &SectionSchema,
    out_path: &Path,
) -> Result<BatchReport, std::io::Error> {
    let results = parallel_map(
        transcripts,
        client.config().max_concurrency,
        |_, transcript| {
            generate_note(transcript, profile, template, client, schema)
                .map(|outcome| outcome.record)
                .map_err(|error| (transcript.id.clone(), error.to_string()))
        },
    );

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(record) => records.push(record),
            Err(failure) => failures.push(failure),
        }
    }
    if failures.is_empty() {
        write_jsonl(out_path, &records)?;
        Ok(BatchReport {
            total: transcripts.len(),
            written: records.len(),
            failures,
        })
    } else {
        Ok(BatchReport {
            total: transcripts.len(),
            written: 0,
            failures,
        })
    }
}
