//! Run configuration: a JSON config file merged with environment variables
//! and command flags (flags win, then environment, then file), resolved
//! before any command runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use scribebench_core::note::{SchemaDef, SchemaError, SectionSchema};
use scribebench_core::rouge::RougeConfig;

use crate::client::ClientConfig;
use crate::generator::{GenerationProfile, PromptTemplate, TemplateError};
use crate::judging::JudgeConfig;
use crate::util::sha256_hex;

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "SCRIBEBENCH_CONFIG";
/// Environment overrides for the endpoint and cache location.
pub const BASE_URL_ENV: &str = "SCRIBEBENCH_BASE_URL";
pub const CACHE_DIR_ENV: &str = "SCRIBEBENCH_CACHE_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("config {path} is not valid JSON: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("schema error: {0}")]
    Schema(#[from] SchemaError),
    #[error("unknown profile `{name}`; known profiles: {known}")]
    UnknownProfile { name: String, known: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// One generation arm in the config file; unset fields inherit defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileSpec {
    pub model: String,
    pub base_url: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub seed: Option<u64>,
    pub template_path: Option<PathBuf>,
}

/// Synthesis section of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisSpec {
    pub specialty: String,
    pub max_revision_iters: u32,
    pub pass_threshold: u8,
    /// Model used by every stage unless overridden per stage.
    pub model: String,
    /// Per-stage model overrides; keys: topics, context, transcript,
    /// critique, revise, note.
    pub stage_models: BTreeMap<String, String>,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        Self {
            specialty: "endocrinology".into(),
            max_revision_iters: 3,
            pass_threshold: 4,
            model: "local".into(),
            stage_models: BTreeMap::new(),
        }
    }
}

/// The config file as written on disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub client: ClientConfig,
    pub schema: Option<SchemaDef>,
    pub schema_path: Option<PathBuf>,
    pub rouge: RougeConfig,
    pub profiles: BTreeMap<String, ProfileSpec>,
    pub judge: JudgeConfig,
    pub synthesis: SynthesisSpec,
}

/// Fully resolved configuration, plus a content hash for run manifests.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub client: ClientConfig,
    pub schema: SectionSchema,
    pub rouge: RougeConfig,
    pub profiles: BTreeMap<String, ProfileSpec>,
    pub judge: JudgeConfig,
    pub synthesis: SynthesisSpec,
    pub config_hash: String,
}

/// Command-line overrides that outrank the environment and the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config_path: Option<PathBuf>,
    pub base_url: Option<String>,
    pub cache_dir: Option<PathBuf>,
}

pub fn load_run_config(overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let path = overrides
        .config_path
        .clone()
        .or_else(|| std::env::var(CONFIG_ENV).ok().map(PathBuf::from));
    let file_text = match &path {
        Some(path) => std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?,
        None => String::new(),
    };
    let file: FileConfig = if file_text.trim().is_empty() {
        FileConfig::default()
    } else {
        serde_json::from_str(&file_text).map_err(|e| ConfigError::Parse {
            path: path.clone().unwrap_or_default(),
            message: e.to_string(),
        })?
    };

    let env_base_url = std::env::var(BASE_URL_ENV).ok();
    let env_cache_dir = std::env::var(CACHE_DIR_ENV).ok().map(PathBuf::from);

    let mut client = file.client.clone();
    if let Some(base_url) = &env_base_url {
        client.base_url = base_url.clone();
    }
    if let Some(cache_dir) = &env_cache_dir {
        client.cache_dir = cache_dir.clone();
    }
    if let Some(base_url) = &overrides.base_url {
        client.base_url = base_url.clone();
    }
    if let Some(cache_dir) = &overrides.cache_dir {
        client.cache_dir = cache_dir.clone();
    }

    let schema = match (&file.schema, &file.schema_path) {
        (Some(def), _) => SectionSchema::try_from(def.clone())?,
        (None, Some(schema_path)) => {
            let text = std::fs::read_to_string(schema_path).map_err(|e| ConfigError::Io {
                path: schema_path.clone(),
                message: e.to_string(),
            })?;
            let def: SchemaDef = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                path: schema_path.clone(),
                message: e.to_string(),
            })?;
            SectionSchema::try_from(def)?
        }
        (None, None) => SectionSchema::default_clinical(),
    };

    let mut judge = file.judge.clone();
    judge.client = client.clone();

    // Hash everything that shapes behavior: file text plus effective
    // overrides.
    let config_hash = sha256_hex(
        format!(
            "{file_text}\u{0}{}\u{0}{}",
            client.base_url,
            client.cache_dir.display()
        )
        .as_bytes(),
    );

    Ok(RunConfig {
        client,
        schema,
        rouge: file.rouge,
        profiles: file.profiles,
        judge,
        synthesis: file.synthesis,
        config_hash,
    })
}

impl RunConfig {
    /// Builds the generation profile and its prompt template for a named arm.
    pub fn resolve_profile(
        &self,
        name: &str,
    ) -> Result<(GenerationProfile, PromptTemplate), ConfigError> {
        let spec = self
            .profiles
            .get(name)
            .ok_or_else(|| ConfigError::UnknownProfile {
                name: name.to_string(),
                known: if self.profiles.is_empty() {
                    "(none configured)".to_string()
                } else {
                    self.profiles.keys().cloned().collect::<Vec<_>>().join(", ")
                },
            })?;
        let mut client = self.client.clone();
        if let Some(base_url) = &spec.base_url {
            client.base_url = base_url.clone();
        }
        let template = match &spec.template_path {
            Some(path) => PromptTemplate::load(path, &self.schema)?,
            None => PromptTemplate::default_note(&self.schema),
        };
        let mut profile = GenerationProfile::new(name, client, spec.model.clone());
        profile.prompt_template_id = template.template_id.clone();
        if let Some(temperature) = spec.temperature {
            profile.temperature = temperature;
        }
        if let Some(max_tokens) = spec.max_tokens {
            profile.max_tokens = max_tokens;
        }
        profile.seed = spec.seed;
        Ok((profile, template))
    }

    /// Model for a synthesis stage: per-stage override or the shared model.
    pub fn synthesis_stage_model(&self, stage: &str) -> String {
        self.synthesis
            .stage_models
            .get(stage)
            .cloned()
            .unwrap_or_else(|| self.synthesis.model.clone())
    }
}
