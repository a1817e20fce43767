//! Chat-completions wire client shared by generation, synthesis, and
//! judging: bounded concurrency, sliding-window rate limiting, retries with
//! jittered exponential backoff, and a write-once on-disk response cache
//! keyed by a canonical request digest.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::util::{sha256_hex, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
    pub force_structured_output: bool,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.messages.is_empty() {
            return Err(ClientError::InvalidRequest(
                "messages must not be empty".into(),
            ));
        }
        if self.messages[0].role == Role::Assistant {
            return Err(ClientError::InvalidRequest(
                "first message must be system or user".into(),
            ));
        }
        if self.temperature < 0.0 {
            return Err(ClientError::InvalidRequest(
                "temperature must be >= 0".into(),
            ));
        }
        if self.max_tokens == 0 {
            return Err(ClientError::InvalidRequest(
                "max_tokens must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub finish_reason: FinishReason,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

fn default_base_url() -> String {
    "http://127.0.0.1:8080".to_string()
}

fn default_api_key_env() -> String {
    "SCRIBEBENCH_API_KEY".to_string()
}

fn default_timeout_secs() -> u64 {
    120
}

fn default_max_retries() -> u32 {
    3
}

fn default_backoff_base_ms() -> u64 {
    1000
}

fn default_max_concurrency() -> usize {
    4
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from(".scribebench/cache")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientConfig {
    pub base_url: String,
    /// Name of the environment variable holding the API key; the key itself
    /// never appears in config files, logs, or the cache.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub max_concurrency: usize,
    /// Sliding-window request cap; `None` disables rate limiting.
    pub requests_per_minute: Option<u32>,
    pub cache_dir: PathBuf,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            base_url: default_base_url(),
            api_key_env: default_api_key_env(),
            timeout_secs: default_timeout_secs(),
            max_retries: default_max_retries(),
            backoff_base_ms: default_backoff_base_ms(),
            max_concurrency: default_max_concurrency(),
            requests_per_minute: None,
            cache_dir: default_cache_dir(),
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.timeout_secs == 0 {
            return Err(ClientError::InvalidRequest("timeout must be > 0".into()));
        }
        if self.max_concurrency == 0 {
            return Err(ClientError::InvalidRequest(
                "max_concurrency must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("http {status}: {body}")]
    Http { status: u16, body: String },
    #[error("request failed after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("cache error at {path}: {message}")]
    Cache { path: PathBuf, message: String },
}

/// 64-hex-character digest of the canonical request serialization. Equal
/// requests get equal keys; any field difference changes the key.
pub fn cache_key(request: &ChatRequest) -> String {
    let canonical = serde_json::to_string(request).expect("request serializes");
    sha256_hex(canonical.as_bytes())
}

/// Raw wire-level response: HTTP status plus body text.
pub struct WireResponse {
    pub status: u16,
    pub body: String,
}

/// Transport seam; production uses ureq, tests may script responses.
pub trait ChatTransport: Send + Sync {
    fn post(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &str,
        timeout: Duration,
    ) -> Result<WireResponse, String>;
}

struct UreqTransport;

impl ChatTransport for UreqTransport {
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
            Err(ureq::Error::Status(status, response)) => {
                let body = response.into_string().unwrap_or_default();
                Ok(WireResponse { status, body })
            }
            Err(ureq::Error::Transport(t)) => Err(t.to_string()),
        }
    }
}

struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.semaphore.permits.lock().unwrap() += 1;
        self.semaphore.available.notify_one();
    }
}

// Sliding-window limiter: at most `limit` admissions per window, enforced on
// the exact timestamps of prior admissions.
struct RateLimiter {
    limit: u32,
    window: Duration,
    admitted: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    fn new(limit: u32, window: Duration) -> Self {
        Self {
            limit,
            window,
            admitted: Mutex::new(VecDeque::new()),
        }
    }

    fn acquire(&self) {
        loop {
            let wait = {
                let mut admitted = self.admitted.lock().unwrap();
                let now = Instant::now();
                while admitted
                    .front()
                    .is_some_and(|&t| now.duration_since(t) >= self.window)
                {
                    admitted.pop_front();
                }
                if (admitted.len() as u32) < self.limit {
                    admitted.push_back(now);
                    return;
                }
                self.window - now.duration_since(*admitted.front().unwrap())
            };
            std::thread::sleep(wait);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    digest: String,
    request: serde_json::Value,
    body: String,
}

fn xorshift(state: &mut u64) -> u64 {
    let mut x = *state;
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    *state = x;
    x
}

/// Shareable across worker threads; limiter, gate, and cache are internally
/// synchronized.
pub struct ChatClient {
    config: ClientConfig,
    transport: Arc<dyn ChatTransport>,
    gate: Semaphore,
    limiter: Option<RateLimiter>,
    network_calls: AtomicU64,
    jitter_seed: Mutex<u64>,
}

impl ChatClient {
    pub fn new(config: ClientConfig) -> Result<Self, ClientError> {
        Self::with_transport(config, Arc::new(UreqTransport))
    }

    pub fn with_transport(
        config: ClientConfig,
        transport: Arc<dyn ChatTransport>,
    ) -> Result<Self, ClientError> {
        config.validate()?;
        let seed = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0x9e3779b97f4a7c15)
            | 1;
        Ok(Self {
            gate: Semaphore::new(config.max_concurrency),
            limiter: config
                .requests_per_minute
                .map(|limit| RateLimiter::new(limit, Duration::from_secs(60))),
            transport,
            config,
            network_calls: AtomicU64::new(0),
            jitter_seed: Mutex::new(seed),
        })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    /// Requests that actually reached the wire (cache hits excluded).
    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::SeqCst)
    }

    fn cache_path(&self, key: &str) -> PathBuf {
        self.config.cache_dir.join(format!("{key}.json"))
    }

    fn cache_read(&self, key: &str) -> Result<Option<String>, ClientError> {
        let path = self.cache_path(key);
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                let entry: CacheEntry =
                    serde_json::from_str(&text).map_err(|e| ClientError::Cache {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                Ok(Some(entry.body))
            }
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(err) => Err(ClientError::Cache {
                path,
                message: err.to_string(),
            }),
        }
    }

    // Write-once: an existing entry is left untouched.
    fn cache_write(&self, key: &str, request: &ChatRequest, body: &str) -> Result<(), ClientError> {
        let path = self.cache_path(key);
        if path.exists() {
            return Ok(());
        }
        let entry = CacheEntry {
            digest: key.to_string(),
            request: serde_json::to_value(request).expect("request serializes"),
            body: body.to_string(),
        };
        let text = serde_json::to_string(&entry).expect("entry serializes");
        write_atomic(&path, text.as_bytes()).map_err(|e| ClientError::Cache {
            path,
            message: e.to_string(),
        })
    }

    fn backoff_delay(&self, completed_attempts: u32) -> Duration {
        let base = self.config.backoff_base_ms.max(1);
        let exp = base.saturating_mul(1u64 << completed_attempts.min(16));
        let mut seed = self.jitter_seed.lock().unwrap();
        let jitter = xorshift(&mut seed) % (exp / 2 + 1);
        Duration::from_millis(exp / 2 + jitter)
    }

    /// Serves from cache when possible; otherwise performs the wire call with
    /// retries on timeouts, 429, and 5xx, and stores the response before
    /// returning. Non-429 4xx statuses fail immediately.
    pub fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError> {
        request.validate()?;
        let key = cache_key(request);
        if let Some(body) = self.cache_read(&key)? {
            return parse_chat_body(&body);
        }

        let _permit = self.gate.acquire();
        let url = format!(
            "{}/v1/chat/completions",
            self.config.base_url.trim_end_matches('/')
        );
        let body = wire_body(request);
        let api_key = std::env::var(&self.config.api_key_env).ok();
        let timeout = Duration::from_secs(self.config.timeout_secs);

        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff_delay(attempt - 1));
            }
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            match self
                .transport
                .post(&url, api_key.as_deref(), &body, timeout)
            {
                Ok(wire) if (200..300).contains(&wire.status) => {
                    let response = parse_chat_body(&wire.body)?;
                    self.cache_write(&key, request, &wire.body)?;
                    return Ok(response);
                }
                Ok(wire) if wire.status == 429 || (500..600).contains(&wire.status) => {
                    last_error = format!("http {}", wire.status);
                }
                Ok(wire) => {
                    return Err(ClientError::Http {
                        status: wire.status,
                        body: wire.body,
                    });
                }
                Err(transport) => last_error = transport,
            }
        }
        Err(ClientError::RetriesExhausted {
            attempts: self.config.max_retries + 1,
            last: last_error,
        })
    }
}

fn wire_body(request: &ChatRequest) -> String {
    let messages: Vec<serde_json::Value> = request
        .messages
        .iter()
        .map(|m| serde_json::json!({ "role": m.role, "content": m.content }))
        .collect();
    let mut body = serde_json::json!({
        "model": request.model,
        "messages": messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    });
    if let Some(seed) = request.seed {
        body["seed"] = serde_json::json!(seed);
    }
    if request.force_structured_output {
        body["response_format"] = serde_json::json!({ "type": "json_object" });
    }
    body.to_string()
}

#[derive(Deserialize)]
struct WireChatResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize, Default)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

fn parse_chat_body(body: &str) -> Result<ChatResponse, ClientError> {
    let wire: WireChatResponse =
        serde_json::from_str(body).map_err(|e| ClientError::MalformedResponse(e.to_string()))?;
    let choice = wire
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| ClientError::MalformedResponse("response has no choices".into()))?;
    let finish_reason = match choice.finish_reason.as_deref() {
        Some("stop") => FinishReason::Stop,
        Some("length") => FinishReason::Length,
        _ => FinishReason::Other,
    };
    let content = match (choice.message.content, finish_reason) {
        (Some(content), _) => content,
        (None, FinishReason::Stop) => {
            return Err(ClientError::MalformedResponse(
                "finish_reason is stop but content is missing".into(),
            ));
        }
        (None, _) => String::new(),
    };
    let usage = wire.usage.unwrap_or_default();
    Ok(ChatResponse {
        content,
        finish_reason,
        prompt_tokens: usage.prompt_tokens,
        completion_tokens: usage.completion_tokens,
    })
}

/// One shared client per distinct endpoint configuration, so concurrency
/// bounds and rate limits hold process-wide even when several profiles point
/// at the same endpoint.
#[derive(Default)]
pub struct ClientPool {
    transport: Option<Arc<dyn ChatTransport>>,
    clients: Mutex<std::collections::BTreeMap<String, Arc<ChatClient>>>,
}

impl ClientPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every client built by this pool uses the given transport; for tests.
    pub fn with_transport(transport: Arc<dyn ChatTransport>) -> Self {
        Self {
            transport: Some(transport),
            clients: Mutex::new(Default::default()),
        }
    }

    pub fn client_for(&self, config: &ClientConfig) -> Result<Arc<ChatClient>, ClientError> {
        let key = serde_json::to_string(config).expect("config serializes");
        let mut clients = self.clients.lock().unwrap();
        if let Some(client) = clients.get(&key) {
            return Ok(Arc::clone(client));
        }
        let client = match &self.transport {
            Some(transport) => ChatClient::with_transport(config.clone(), Arc::clone(transport))?,
            None => ChatClient::new(config.clone())?,
        };
        let client = Arc::new(client);
        clients.insert(key, Arc::clone(&client));
        Ok(client)
    }

    /// Wire calls summed over every client in the pool.
    pub fn total_network_calls(&self) -> u64 {
        self.clients
            .lock()
            .unwrap()
            .values()
            .map(|c| c.network_calls())
            .sum()
    }
}

/// Removes every cached response under `cache_dir`; returns how many entries
/// were deleted.
pub fn clear_cache(cache_dir: &Path) -> std::io::Result<usize> {
    let mut removed = 0;
    match std::fs::read_dir(cache_dir) {
        Ok(entries) => {
            for entry in entries {
                let entry = entry?;
                if entry.path().extension().is_some_and(|e| e == "json") {
                    std::fs::remove_file(entry.path())?;
                    removed += 1;
                }
            }
            Ok(removed)
        }
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => Ok(0),
        Err(err) => Err(err),
    }
}
