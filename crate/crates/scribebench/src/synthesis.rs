//! Multi-stage synthetic dataset workflow: topics, case contexts, dialogue
//! synthesis, a critique/revision loop, and note transformation, with
//! per-record per-stage checkpoints so a killed run resumes byte-identically
//! under a warm response cache.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scribebench_core::note::{SectionSchema, parse_note, serialize_note};

use crate::client::{ChatClient, ChatMessage, ChatRequest, ClientConfig, ClientError, ClientPool};
use crate::dataset::{SynthRecord, write_jsonl};
use crate::generator::{
    GenerationProfile, PromptTemplate, TemplateError, parallel_map, parse_template_file,
};
use crate::util::{fill_placeholders, sha256_hex, write_atomic};

pub const DEFAULT_TOPICS_TEMPLATE: &str = include_str!("../templates/topics.txt");
pub const DEFAULT_CONTEXT_TEMPLATE: &str = include_str!("../templates/context.txt");
pub const DEFAULT_TRANSCRIPT_TEMPLATE: &str = include_str!("../templates/transcript.txt");
pub const DEFAULT_CRITIQUE_TEMPLATE: &str = include_str!("../templates/critique.txt");
pub const DEFAULT_REVISE_TEMPLATE: &str = include_str!("../templates/revise.txt");

/// Warning token for notes that kept no recognized section after transform.
pub const WARN_NOTE_UNSTRUCTURED: &str = "note_unstructured";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: String,
    pub title: String,
    pub focus: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseContext {
    pub topic_id: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CritiqueResult {
    pub completeness: u8,
    pub clinical_relevance: u8,
    pub realism: u8,
    pub feedback: String,
    pub passed: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
    #[error("could not reach {wanted} distinct topics after re-requests (got {distinct})")]
    PersistentDuplicates { wanted: usize, distinct: usize },
    #[error("could not parse topic list: {detail}")]
    TopicParse { detail: String },
    #[error("stage `{stage}` returned empty output")]
    EmptyStageOutput { stage: &'static str },
    #[error("dialogue validation failed after re-request: {detail}")]
    DialogueValidation { detail: String },
    #[error("critique could not be parsed after re-ask: {detail}")]
    CritiqueParse { detail: String },
    #[error("checkpoint error at {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("checkpoint dir belongs to a different config (manifest {path})")]
    ConfigChanged { path: PathBuf },
    #[error("io error at {path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// A synthesis-stage prompt (same file format as generation templates, but
/// without the transcript-placeholder requirement).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTemplate {
    pub template_id: String,
    pub system_text: String,
    pub user_text: String,
}

impl StageTemplate {
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let (template_id, system_text, user_text) = parse_template_file(text)?;
        Ok(Self {
            template_id,
            system_text,
            user_text,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|e| TemplateError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    fn messages(&self, values: &[(&str, &str)]) -> Vec<ChatMessage> {
        vec![
            ChatMessage::system(fill_placeholders(&self.system_text, values)),
            ChatMessage::user(fill_placeholders(&self.user_text, values)),
        ]
    }
}

/// The per-stage prompt set.
#[derive(Debug, Clone)]
pub struct SynthesisTemplates {
    pub topics: StageTemplate,
    pub context: StageTemplate,
    pub transcript: StageTemplate,
    pub critique: StageTemplate,
    pub revise: StageTemplate,
    pub note: PromptTemplate,
}

impl SynthesisTemplates {
    pub fn defaults(schema: &SectionSchema) -> Self {
        Self {
            topics: StageTemplate::parse(DEFAULT_TOPICS_TEMPLATE).expect("bundled template"),
            context: StageTemplate::parse(DEFAULT_CONTEXT_TEMPLATE).expect("bundled template"),
            transcript: StageTemplate::parse(DEFAULT_TRANSCRIPT_TEMPLATE)
                .expect("bundled template"),
            critique: StageTemplate::parse(DEFAULT_CRITIQUE_TEMPLATE).expect("bundled template"),
            revise: StageTemplate::parse(DEFAULT_REVISE_TEMPLATE).expect("bundled template"),
            note: PromptTemplate::default_note(schema),
        }
    }
}

/// One generation profile per stage; the critic may use a different model
/// from the generator stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageProfiles {
    pub topics: GenerationProfile,
    pub context: GenerationProfile,
    pub transcript: GenerationProfile,
    pub critique: GenerationProfile,
    pub revise: GenerationProfile,
    pub note: GenerationProfile,
}

impl StageProfiles {
    /// One model everywhere; creative stages at temperature 0.7, critique at
    /// 0.0, note transformation at 0.2.
    pub fn uniform(client: &ClientConfig, model: &str) -> Self {
        let stage = |id: &str, temperature: f64, max_tokens: u32| {
            let mut profile = GenerationProfile::new(id, client.clone(), model);
            profile.temperature = temperature;
            profile.max_tokens = max_tokens;
            profile
        };
        Self {
            topics: stage("synthesis-topics", 0.7, 2048),
            context: stage("synthesis-context", 0.7, 1024),
            transcript: stage("synthesis-transcript", 0.7, 4096),
            critique: stage("synthesis-critique", 0.0, 512),
            revise: stage("synthesis-revise", 0.7, 4096),
            note: stage("synthesis-note", 0.2, 1024),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub count: usize,
    pub specialty: String,
    pub max_revision_iters: u32,
    pub pass_threshold: u8,
    pub stages: StageProfiles,
    pub checkpoint_dir: PathBuf,
}

impl SynthesisConfig {
    pub fn new(count: usize, checkpoint_dir: PathBuf, client: &ClientConfig, model: &str) -> Self {
        Self {
            count,
            specialty: "endocrinology".into(),
            max_revision_iters: 3,
            pass_threshold: 4,
            stages: StageProfiles::uniform(client, model),
            checkpoint_dir,
        }
    }

    pub fn validate(&self) -> Result<(), SynthesisError> {
        if self.count == 0 {
            return Err(SynthesisError::InvalidConfig("count must be >= 1".into()));
        }
        if !(1..=5).contains(&self.pass_threshold) {
            return Err(SynthesisError::InvalidConfig(
                "pass_threshold must be in 1..=5".into(),
            ));
        }
        Ok(())
    }

    /// Hash identifying the workflow behavior. The target count and the
    /// checkpoint location are excluded so a pilot run can be resumed and
    /// scaled up in place.
    pub fn stable_hash(&self) -> String {
        let canonical = serde_json::json!({
            "specialty": self.specialty,
            "max_revision_iters": self.max_revision_iters,
            "pass_threshold": self.pass_threshold,
            "stages": self.stages,
        })
        .to_string();
        sha256_hex(canonical.as_bytes())
    }
}

fn stage_request(
    profile: &GenerationProfile,
    messages: Vec<ChatMessage>,
    structured: bool,
) -> ChatRequest {
    ChatRequest {
        model: profile.model.clone(),
        messages,
        temperature: profile.temperature,
        max_tokens: profile.max_tokens,
        seed: profile.seed,
        force_structured_output: structured,
    }
}

fn reask(request: &ChatRequest, previous: &str, complaint: &str) -> ChatRequest {
    let mut messages = request.messages.clone();
    messages.push(ChatMessage::assistant(previous));
    messages.push(ChatMessage::user(format!(
        "Your previous response could not be used: {complaint}. Respond again, following the required format exactly."
    )));
    ChatRequest {
        messages,
        ..request.clone()
    }
}

#[derive(Deserialize)]
struct TopicWire {
    title: String,
    #[serde(default)]
    focus: String,
}

fn extract_span(text: &str, open: char, close: char) -> &str {
    let trimmed = text.trim();
    match (trimmed.find(open), trimmed.rfind(close)) {
        (Some(start), Some(end)) if start < end => &trimmed[start..=end],
        _ => trimmed,
    }
}

fn parse_topic_batch(text: &str) -> Result<Vec<TopicWire>, String> {
    serde_json::from_str(extract_span(text, '[', ']')).map_err(|e| e.to_string())
}

/// Requests `n` distinct topics, re-requesting on case-insensitive title
/// duplicates (or unparseable batches) up to 3 times.
pub fn generate_topics(
    n: usize,
    specialty: &str,
    profile: &GenerationProfile,
    client: &ChatClient,
    template: &StageTemplate,
) -> Result<Vec<Topic>, SynthesisError> {
    if n == 0 {
        return Err(SynthesisError::InvalidConfig(
            "topic count must be >= 1".into(),
        ));
    }
    let mut accepted: Vec<Topic> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut last_parse_error = String::new();
    for _attempt in 0..4 {
        let need = n - accepted.len();
        let avoid = if accepted.is_empty() {
            String::new()
        } else {
            let titles: Vec<&str> = accepted.iter().map(|t| t.title.as_str()).collect();
            format!("\nDo not reuse any of these titles: {}.", titles.join("; "))
        };
        let need_text = need.to_string();
        let messages = template.messages(&[
            ("count", need_text.as_str()),
            ("specialty", specialty),
            ("avoid", avoid.as_str()),
        ]);
        let response = client.chat(&stage_request(profile, messages, false))?;
        match parse_topic_batch(&response.content) {
            Ok(batch) => {
                for wire in batch {
                    let title = wire.title.trim().to_string();
                    if title.is_empty() {
                        continue;
                    }
                    if seen.insert(title.to_lowercase()) {
                        accepted.push(Topic {
                            topic_id: format!("t{:04}", accepted.len() + 1),
                            title,
                            focus: wire.focus.trim().to_string(),
                        });
                        if accepted.len() == n {
                            return Ok(accepted);
                        }
                    }
                }
            }
            Err(detail) => last_parse_error = detail,
        }
    }
    if accepted.is_empty() && !last_parse_error.is_empty() {
        return Err(SynthesisError::TopicParse {
            detail: last_parse_error,
        });
    }
    Err(SynthesisError::PersistentDuplicates {
        wanted: n,
        distinct: accepted.len(),
    })
}

/// One detailed case description per topic.
pub fn expand_context(
    topic: &Topic,
    specialty: &str,
    profile: &GenerationProfile,
    client: &ChatClient,
    template: &StageTemplate,
) -> Result<CaseContext, SynthesisError> {
    let messages = template.messages(&[
        ("specialty", specialty),
        ("title", topic.title.as_str()),
        ("focus", topic.focus.as_str()),
    ]);
    let response = client.chat(&stage_request(profile, messages, false))?;
    let description = response.content.trim().to_string();
    if description.is_empty() {
        return Err(SynthesisError::EmptyStageOutput { stage: "context" });
    }
    Ok(CaseContext {
        topic_id: topic.topic_id.clone(),
        description,
    })
}

/// Lightweight dialogue check: at least two distinct `Name:` line prefixes.
pub fn validate_dialogue(text: &str) -> Result<(), String> {
    let mut speakers: BTreeSet<String> = BTreeSet::new();
    for line in text.lines() {
        let line = line.trim_start();
        if let Some(colon) = line.find(':') {
            let name = line[..colon].trim();
            let plausible = !name.is_empty()
                && name.len() <= 40
                && name.chars().any(|c| c.is_alphabetic())
                && name
                    .chars()
                    .all(|c| c.is_alphanumeric() || matches!(c, ' ' | '.' | '\'' | '-'));
            if plausible {
                speakers.insert(name.to_lowercase());
            }
        }
    }
    if speakers.len() >= 2 {
        Ok(())
    } else {
        Err(format!(
            "found {} distinct speaker label(s), need at least 2",
            speakers.len()
        ))
    }
}

fn chat_for_dialogue(
    stage: &'static str,
    request: ChatRequest,
    client: &ChatClient,
) -> Result<String, SynthesisError> {
    let response = client.chat(&request)?;
    let text = response.content.trim().to_string();
    if text.is_empty() {
        return Err(SynthesisError::EmptyStageOutput { stage });
    }
    match validate_dialogue(&text) {
        Ok(()) => Ok(text),
        Err(detail) => {
            let retry = reask(
                &request,
                &text,
                &format!(
                    "{detail}; every spoken turn must start with the speaker's name and a colon"
                ),
            );
            let response = client.chat(&retry)?;
            let text = response.content.trim().to_string();
            if text.is_empty() {
                return Err(SynthesisError::EmptyStageOutput { stage });
            }
            validate_dialogue(&text)
                .map_err(|detail| SynthesisError::DialogueValidation { detail })?;
            Ok(text)
        }
    }
}

/// Synthesizes a consultation dialogue from a case context; invalid dialogue
/// is re-requested once.
pub fn synthesize_transcript(
    context: &CaseContext,
    specialty: &str,
    profile: &GenerationProfile,
    client: &ChatClient,
    template: &StageTemplate,
) -> Result<String, SynthesisError> {
    let messages = template.messages(&[
        ("specialty", specialty),
        ("context", context.description.as_str()),
    ]);
    chat_for_dialogue(
        "transcript",
        stage_request(profile, messages, false),
        client,
    )
}

fn parse_critique(text: &str, threshold: u8) -> Result<CritiqueResult, String> {
    let value: serde_json::Value =
        serde_json::from_str(extract_span(text, '{', '}')).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("not a JSON object")?;
    let mut scores = [0u8; 3];
    for (slot, field) in scores
        .iter_mut()
        .zip(["completeness", "clinical_relevance", "realism"])
    {
        let raw = obj
            .get(field)
            .ok_or_else(|| format!("missing field `{field}`"))?
            .as_i64()
            .ok_or_else(|| format!("field `{field}` is not an integer"))?;
        if !(1..=5).contains(&raw) {
            return Err(format!("field `{field}` out of range: {raw}"));
        }
        *slot = raw as u8;
    }
    let feedback = obj
        .get("feedback")
        .and_then(|v| v.as_str())
        .unwrap_or_default()
        .to_string();
    Ok(CritiqueResult {
        completeness: scores[0],
        clinical_relevance: scores[1],
        realism: scores[2],
        feedback,
        passed: scores.iter().all(|&s| s >= threshold),
    })
}

/// Scores a transcript on completeness, clinical relevance, and realism;
/// unparseable or out-of-range output is re-asked once.
pub fn critique_transcript(
    transcript: &str,
    specialty: &str,
    threshold: u8,
    profile: &GenerationProfile,
    client: &ChatClient,
    template: &StageTemplate,
) -> Result<CritiqueResult, SynthesisError> {
    let messages = template.messages(&[("specialty", specialty), ("transcript", transcript)]);
    let request = stage_request(profile, messages, true);
    let response = client.chat(&request)?;
    match parse_critique(&response.content, threshold) {
        Ok(result) => Ok(result),
        Err(detail) => {
            let retry = reask(&request, &response.content, &detail);
            let response = client.chat(&retry)?;
            parse_critique(&response.content, threshold)
                .map_err(|detail| SynthesisError::CritiqueParse { detail })
        }
    }
}

/// Rewrites a transcript according to critique feedback; validated like
/// [`synthesize_transcript`].
pub fn revise_transcript(
    transcript: &str,
    critique: &CritiqueResult,
    specialty: &str,
    profile: &GenerationProfile,
    client: &ChatClient,
    template: &StageTemplate,
) -> Result<String, SynthesisError> {
    let messages = template.messages(&[
        ("specialty", specialty),
        ("feedback", critique.feedback.as_str()),
        ("transcript", transcript),
    ]);
    chat_for_dialogue("revise", stage_request(profile, messages, false), client)
}

/// Transforms a transcript into a structured note. If no schema heading is
/// recognized the request is retried once; a still-unstructured note is kept
/// and flagged.
pub fn transform_to_note(
    transcript: &str,
    profile: &GenerationProfile,
    client: &ChatClient,
    template: &PromptTemplate,
    schema: &SectionSchema,
) -> Result<(String, bool), SynthesisError> {
    let request = stage_request(profile, template.render(transcript), false);
    let response = client.chat(&request)?;
    let parsed = parse_note(&response.content, schema);
    if parsed.recognized_count() > 0 {
        return Ok((serialize_note(&parsed), false));
    }
    let headings = schema.canonical_headings().join(", ");
    let retry = reask(
        &request,
        &response.content,
        &format!(
            "the note contained no recognized section headings; use '## <Heading>' lines from: {headings}"
        ),
    );
    let response = client.chat(&retry)?;
    let parsed = parse_note(&response.content, schema);
    let unstructured = parsed.recognized_count() == 0;
    Ok((serialize_note(&parsed), unstructured))
}

#[derive(Serialize, Deserialize)]
struct DialogueCheckpoint {
    critique: CritiqueResult,
    revisions: u32,
}

struct Checkpoints {
    dir: PathBuf,
}

impl Checkpoints {
    fn stage_path(&self, record: usize, stage: &str) -> PathBuf {
        self.dir
            .join(format!("{record:05}"))
            .join(format!("{stage}.out"))
    }

    fn read(&self, record: usize, stage: &str) -> Result<Option<String>, SynthesisError> {
        let path = self.stage_path(record, stage);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(Some(text)),
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(err) => Err(SynthesisError::Checkpoint {
                path,
                message: err.to_string(),
            }),
        }
    }

    fn write(&self, record: usize, stage: &str, content: &str) -> Result<(), SynthesisError> {
        let path = self.stage_path(record, stage);
        write_atomic(&path, content.as_bytes()).map_err(|e| SynthesisError::Checkpoint {
            path,
            message: e.to_string(),
        })
    }

    fn manifest_path(&self) -> PathBuf {
        self.dir.join("run_manifest")
    }

    // Refuses to reuse a checkpoint dir created under a different workflow
    // config.
    fn ensure_manifest(&self, config_hash: &str) -> Result<(), SynthesisError> {
        let path = self.manifest_path();
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                let value: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| SynthesisError::Checkpoint {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                if value.get("config_hash").and_then(|v| v.as_str()) == Some(config_hash) {
                    Ok(())
                } else {
                    Err(SynthesisError::ConfigChanged { path })
                }
            }
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => {
                let text = serde_json::json!({ "config_hash": config_hash }).to_string();
                write_atomic(&path, text.as_bytes()).map_err(|e| SynthesisError::Checkpoint {
                    path,
                    message: e.to_string(),
                })
            }
            Err(err) => Err(SynthesisError::Checkpoint {
                path,
                message: err.to_string(),
            }),
        }
    }
}

#[derive(Debug)]
pub struct PipelineReport {
    pub requested: usize,
    pub written: usize,
    pub failures: Vec<(String, String)>,
}

fn record_id(index: usize) -> String {
    format!("syn-{:05}", index + 1)
}

struct StageClients {
    topics: std::sync::Arc<ChatClient>,
    context: std::sync::Arc<ChatClient>,
    transcript: std::sync::Arc<ChatClient>,
    critique: std::sync::Arc<ChatClient>,
    revise: std::sync::Arc<ChatClient>,
    note: std::sync::Arc<ChatClient>,
}

impl StageClients {
    fn build(pool: &ClientPool, stages: &StageProfiles) -> Result<Self, ClientError> {
        Ok(Self {
            topics: pool.client_for(&stages.topics.client)?,
            context: pool.client_for(&stages.context.client)?,
            transcript: pool.client_for(&stages.transcript.client)?,
            critique: pool.client_for(&stages.critique.client)?,
            revise: pool.client_for(&stages.revise.client)?,
            note: pool.client_for(&stages.note.client)?,
        })
    }
}

fn build_record(
    index: usize,
    config: &SynthesisConfig,
    templates: &SynthesisTemplates,
    clients: &StageClients,
    schema: &SectionSchema,
    checkpoints: &Checkpoints,
) -> Result<SynthRecord, SynthesisError> {
    let topic: Topic = match checkpoints.read(index, "topic")? {
        Some(text) => serde_json::from_str(&text).map_err(|e| SynthesisError::Checkpoint {
            path: checkpoints.stage_path(index, "topic"),
            message: e.to_string(),
        })?,
        None => {
            return Err(SynthesisError::Checkpoint {
                path: checkpoints.stage_path(index, "topic"),
                message: "missing topic checkpoint".into(),
            });
        }
    };

    let context = match checkpoints.read(index, "context")? {
        Some(text) => CaseContext {
            topic_id: topic.topic_id.clone(),
            description: text,
        },
        None => {
            let context = expand_context(
                &topic,
                &config.specialty,
                &config.stages.context,
                &clients.context,
                &templates.context,
            )?;
            checkpoints.write(index, "context", &context.description)?;
            context
        }
    };

    // The dialogue stage is complete only when both files exist; a partial
    // pair is recomputed deterministically from the warm cache.
    let (transcript, critique, revisions) = match (
        checkpoints.read(index, "transcript")?,
        checkpoints.read(index, "critique")?,
    ) {
        (Some(text), Some(meta)) => {
            let saved: DialogueCheckpoint =
                serde_json::from_str(&meta).map_err(|e| SynthesisError::Checkpoint {
                    path: checkpoints.stage_path(index, "critique"),
                    message: e.to_string(),
                })?;
            (text, saved.critique, saved.revisions)
        }
        _ => {
            let mut transcript = synthesize_transcript(
                &context,
                &config.specialty,
                &config.stages.transcript,
                &clients.transcript,
                &templates.transcript,
            )?;
            let mut critique = critique_transcript(
                &transcript,
                &config.specialty,
                config.pass_threshold,
                &config.stages.critique,
                &clients.critique,
                &templates.critique,
            )?;
            let mut revisions = 0u32;
            while !critique.passed && revisions < config.max_revision_iters {
                transcript = revise_transcript(
                    &transcript,
                    &critique,
                    &config.specialty,
                    &config.stages.revise,
                    &clients.revise,
                    &templates.revise,
                )?;
                revisions += 1;
                critique = critique_transcript(
                    &transcript,
                    &config.specialty,
                    config.pass_threshold,
                    &config.stages.critique,
                    &clients.critique,
                    &templates.critique,
                )?;
            }
            let meta = DialogueCheckpoint {
                critique: critique.clone(),
                revisions,
            };
            checkpoints.write(index, "critique", &serde_json::to_string(&meta).unwrap())?;
            checkpoints.write(index, "transcript", &transcript)?;
            (transcript, critique, revisions)
        }
    };

    let note = match checkpoints.read(index, "note")? {
        Some(text) => text,
        None => {
            let (note, _unstructured) = transform_to_note(
                &transcript,
                &config.stages.note,
                &clients.note,
                &templates.note,
                schema,
            )?;
            checkpoints.write(index, "note", &note)?;
            note
        }
    };

    let mut warnings = Vec::new();
    if parse_note(&note, schema).recognized_count() == 0 {
        warnings.push(WARN_NOTE_UNSTRUCTURED.to_string());
    }
    Ok(SynthRecord {
        id: record_id(index),
        transcript,
        note,
        critique_passed: critique.passed,
        revisions,
        warnings,
    })
}

/// Runs the whole workflow for `config.count` records (or the pilot subset),
/// checkpointing each stage. The output file is written only when every
/// record succeeded; failures are listed per record id. Records run
/// concurrently, stages within a record sequentially.
pub fn run_pipeline(
    config: &SynthesisConfig,
    templates: &SynthesisTemplates,
    pool: &ClientPool,
    schema: &SectionSchema,
    pilot: Option<usize>,
    out_path: &Path,
) -> Result<PipelineReport, SynthesisError> {
    config.validate()?;
    let checkpoints = Checkpoints {
        dir: config.checkpoint_dir.clone(),
    };
    std::fs::create_dir_all(&config.checkpoint_dir).map_err(|e| SynthesisError::Io {
        path: config.checkpoint_dir.clone(),
        message: e.to_string(),
    })?;
    checkpoints.ensure_manifest(&config.stable_hash())?;
    let effective = pilot.map_or(config.count, |p| p.min(config.count));
    let clients = StageClients::build(pool, &config.stages)?;

    // Topics come from one batched call covering whatever records still lack
    // a topic checkpoint.
    let mut missing = Vec::new();
    for index in 0..effective {
        if checkpoints.read(index, "topic")?.is_none() {
            missing.push(index);
        }
    }
    if !missing.is_empty() {
        let topics = generate_topics(
            effective,
            &config.specialty,
            &config.stages.topics,
            &clients.topics,
            &templates.topics,
        )?;
        for &index in &missing {
            checkpoints.write(
                index,
                "topic",
                &serde_json::to_string(&topics[index]).unwrap(),
            )?;
        }
    }

    let indices: Vec<usize> = (0..effective).collect();
    let workers = config.stages.transcript.client.max_concurrency;
    let results = parallel_map(&indices, workers, |_, &index| {
        build_record(index, config, templates, &clients, schema, &checkpoints)
            .map_err(|e| (record_id(index), e.to_string()))
    });

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(record) => records.push(record),
            Err(failure) => failures.push(failure),
        }
    }
    if !failures.is_empty() {
        return Ok(PipelineReport {
            requested: effective,
            written: 0,
            failures,
        });
    }
    write_jsonl(out_path, &records).map_err(|e| SynthesisError::Io {
        path: out_path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(PipelineReport {
        requested: effective,
        written: records.len(),
        failures,
    })
}
