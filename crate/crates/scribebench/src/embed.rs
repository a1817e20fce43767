//! Embedding backends for BERTScore: the deterministic one-hot mock and the
//! token-embedding HTTP service, with per-text response caching keyed by
//! (model, text hash).

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use scribebench_core::bertscore::{self, BertScoreResult, IdfTable, TokenEmbeddings};
use scribebench_core::rouge::RougeConfig;

use crate::client::{ChatTransport, WireResponse};
use crate::util::{sha256_hex, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingBackendKind {
    MockOneHot,
    HttpService,
}

/// Which embedding source to use; `endpoint` is required for the service
/// backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingBackendRef {
    pub kind: EmbeddingBackendKind,
    pub model_id: String,
    pub endpoint: Option<String>,
}

impl EmbeddingBackendRef {
    pub fn mock() -> Self {
        Self {
            kind: EmbeddingBackendKind::MockOneHot,
            model_id: "one-hot".into(),
            endpoint: None,
        }
    }

    pub fn http(endpoint: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            kind: EmbeddingBackendKind::HttpService,
            model_id: model_id.into(),
            endpoint: Some(endpoint.into()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding backend misconfigured: {0}")]
    Config(String),
    #[error("embedding request failed after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: String },
    #[error("embedding service returned http {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed embedding response: {0}")]
    MalformedResponse(String),
    #[error(transparent)]
    Embedding(#[from] bertscore::EmbeddingError),
    #[error("embedding cache error at {path}: {message}")]
    Cache { path: PathBuf, message: String },
}

struct UreqPost;

impl ChatTransport for UreqPost {
    fn post(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &str,
        timeout: Duration,
    ) -> Result<WireResponse, String> {
        let mut request = ureq::post(url)
            .timeout(timeout)
            .set("Content-Type", "application/json");
        if let Some(key) = api_key {
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        match request.send_string(body) {
            Ok(response) => {
                let status = response.status();
                let body = response
                    .into_string()
                    .map_err(|e| format!("reading response body: {e}"))?;
                Ok(WireResponse { status, body })
            }
            Err(ureq::Error::Status(status, response)) => Ok(WireResponse {
                status,
                body: response.into_string().unwrap_or_default(),
            }),
            Err(ureq::Error::Transport(t)) => Err(t.to_string()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WireEmbeddings {
    tokens: Vec<String>,
    embeddings: Vec<Vec<f64>>,
}

/// Fetches token embeddings and scores candidate/reference pairs. Identical
/// text always yields identical embeddings within a run: the mock is pure and
/// the service responses are cached.
pub struct EmbeddingClient {
    backend: EmbeddingBackendRef,
    rouge_config: RougeConfig,
    cache_dir: Option<PathBuf>,
    timeout: Duration,
    max_retries: u32,
    backoff_base_ms: u64,
    transport: Arc<dyn ChatTransport>,
}

impl EmbeddingClient {
    pub fn new(
        backend: EmbeddingBackendRef,
        rouge_config: RougeConfig,
        cache_dir: Option<PathBuf>,
    ) -> Result<Self, EmbedError> {
        Self::with_transport(backend, rouge_config, cache_dir, Arc::new(UreqPost))
    }

    pub fn with_transport(
        backend: EmbeddingBackendRef,
        rouge_config: RougeConfig,
        cache_dir: Option<PathBuf>,
        transport: Arc<dyn ChatTransport>,
    ) -> Result<Self, EmbedError> {
        if backend.kind == EmbeddingBackendKind::HttpService && backend.endpoint.is_none() {
            return Err(EmbedError::Config(
                "http_service backend requires an endpoint".into(),
            ));
        }
        Ok(Self {
            backend,
            rouge_config,
            cache_dir,
            timeout: Duration::from_secs(120),
            max_retries: 3,
            backoff_base_ms: 500,
            transport,
        })
    }

    pub fn backend(&self) -> &EmbeddingBackendRef {
        &self.backend
    }

    /// Token embeddings for one text.
    pub fn embed(&self, text: &str) -> Result<TokenEmbeddings, EmbedError> {
        match self.backend.kind {
            EmbeddingBackendKind::MockOneHot => {
                Ok(bertscore::one_hot_embeddings(text, &self.rouge_config))
            }
            EmbeddingBackendKind::HttpService => {
                let body = self.fetch_embedding_body(text)?;
                let wire: WireEmbeddings = serde_json::from_str(&body)
                    .map_err(|e| EmbedError::MalformedResponse(e.to_string()))?;
                Ok(TokenEmbeddings::new(wire.tokens, wire.embeddings)?)
            }
        }
    }

    /// BERTScore for one candidate/reference pair. The mock embeds the pair
    /// over a shared vocabulary; the service backend embeds each side.
    pub fn score_pair(
        &self,
        candidate: &str,
        reference: &str,
        idf: Option<&IdfTable>,
    ) -> Result<BertScoreResult, EmbedError> {
        match self.backend.kind {
            EmbeddingBackendKind::MockOneHot => Ok(bertscore::score_pair_one_hot(
                candidate,
                reference,
                &self.rouge_config,
                idf,
            )),
            EmbeddingBackendKind::HttpService => {
                let cand = self.embed(candidate)?;
                let refr = self.embed(reference)?;
                Ok(bertscore::greedy_match(&cand, &refr, idf)?)
            }
        }
    }

    fn cache_path(&self, text: &str) -> Option<PathBuf> {
        let dir = self.cache_dir.as_ref()?;
        let key = sha256_hex(
            format!("token_embeddings\u{0}{}\u{0}{text}", self.backend.model_id).as_bytes(),
        );
        Some(dir.join(format!("emb-{key}.json")))
    }

    fn fetch_embedding_body(&self, text: &str) -> Result<String, EmbedError> {
        let cache_path = self.cache_path(text);
        if let Some(path) = &cache_path {
            match std::fs::read_to_string(path) {
                Ok(body) => return Ok(body),
                Err(err) if err.kind() == std::io::ErrorKind::NotFound => {}
                Err(err) => {
                    return Err(EmbedError::Cache {
                        path: path.clone(),
                        message: err.to_string(),
                    });
                }
            }
        }

        let endpoint = self
            .backend
            .endpoint
            .as_deref()
            .expect("validated at construction");
        let url = format!("{}/v1/token_embeddings", endpoint.trim_end_matches('/'));
        let body = serde_json::json!({ "model": self.backend.model_id, "text": text }).to_string();
        let mut last = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(
                    self.backoff_base_ms << (attempt - 1).min(8),
                ));
            }
            match self.transport.post(&url, None, &body, self.timeout) {
                Ok(wire) if (200..300).contains(&wire.status) => {
                    if let Some(path) = &cache_path {
                        write_atomic(path, wire.body.as_bytes()).map_err(|e| {
                            EmbedError::Cache {
                                path: path.clone(),
                                message: e.to_string(),
                            }
                        })?;
                    }
                    return Ok(wire.body);
                }
                Ok(wire) if wire.status == 429 || (500..600).contains(&wire.status) => {
                    last = format!("http {}", wire.status);
                }
                Ok(wire) => {
                    return Err(EmbedError::Http {
                        status: wire.status,
                        body: wire.body,
                    });
                }
                Err(transport) => last = transport,
            }
        }
        Err(EmbedError::Transport {
            attempts: self.max_retries + 1,
            last,
        })
    }
}
