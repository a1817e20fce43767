//! Shared test fixtures: a tiny deterministic chat-completions endpoint that
//! routes on the requested model name. Every response is a pure function of
//! the request body, so cache warm-ups and reruns stay byte-identical.

// Not every test target uses every fixture.
#![allow(dead_code)]

use std::sync::Arc;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::thread::JoinHandle;
use std::time::Duration;

pub struct MockEndpoint {
    port: u16,
    hits: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockEndpoint {
    pub fn start() -> Self {
        let server = tiny_http::Server::http("127.0.0.1:0").expect("bind mock server");
        let port = server.server_addr().to_ip().expect("ip listener").port();
        let hits = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let hits = Arc::clone(&hits);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                loop {
                    match server.recv_timeout(Duration::from_millis(25)) {
                        Ok(Some(mut request)) => {
                            hits.fetch_add(1, Ordering::SeqCst);
                            let mut body = String::new();
                            let _ = request.as_reader().read_to_string(&mut body);
                            let (status, payload) = route(request.url(), &body);
                            let response = tiny_http::Response::from_string(payload)
                                .with_status_code(status)
                                .with_header(
                                    tiny_http::Header::from_bytes(
                                        &b"Content-Type"[..],
                                        &b"application/json"[..],
                                    )
                                    .unwrap(),
                                );
                            let _ = request.respond(response);
                        }
                        Ok(None) => {
                            if stop.load(Ordering::SeqCst) {
                                break;
                            }
                        }
                        Err(_) => break,
                    }
                }
            })
        };
        Self {
            port,
            hits,
            stop,
            handle: Some(handle),
        }
    }

    pub fn base_url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for MockEndpoint {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn chat_body(content: &str, finish: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"content": content}, "finish_reason": finish}],
        "usage": {"prompt_tokens": 10, "completion_tokens": content.len() as u64 / 4}
    })
    .to_string()
}

/// Request router shared by the HTTP server and in-process transports.
pub fn route(url: &str, body: &str) -> (u16, String) {
    match url {
        "/v1/chat/completions" => chat_route(body),
        "/v1/token_embeddings" => embeddings_route(body),
        _ => (404, format!("{{\"error\": \"no such route {url}\"}}")),
    }
}

fn all_text(request: &serde_json::Value) -> String {
    request["messages"]
        .as_array()
        .map(|messages| {
            messages
                .iter()
                .filter_map(|m| m["content"].as_str())
                .collect::<Vec<_>>()
                .join("\n")
        })
        .unwrap_or_default()
}

fn after_marker<'a>(text: &'a str, marker: &str) -> &'a str {
    match text.rfind(marker) {
        Some(at) => &text[at + marker.len()..],
        None => text,
    }
}

fn words_of(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

fn pick(words: &[String], start: usize, n: usize) -> String {
    if words.is_empty() {
        return "nothing".to_string();
    }
    words
        .iter()
        .cycle()
        .skip(start % words.len())
        .take(n)
        .cloned()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Deterministic note text for a transcript; the "tuned" arm is the exact
/// derivation tests use to build reference notes, the "base" arm paraphrases
/// loosely so metric deltas are visible.
pub fn note_for(transcript: &str, arm: &str) -> String {
    let words = words_of(transcript);
    match arm {
        "tuned" => format!(
            "## Chief Complaint\nPatient reports {}.\n## Assessment\nFindings consistent with {}.\n## Plan\nRecheck labs in six weeks and continue the current dose.\n",
            pick(&words, 2, 5),
            pick(&words, 5, 4),
        ),
        _ => format!(
            "## Chief Complaint\nThe visit broadly concerns {} today.\n## Assessment\nPerhaps related to {} among several possibilities.\n## Plan\nReturn at some point.\n",
            pick(&words, 3, 3),
            pick(&words, 8, 2),
        ),
    }
}

fn djb2(text: &str) -> u64 {
    text.bytes()
        .fold(5381u64, |h, b| h.wrapping_mul(33) ^ u64::from(b))
}

fn topics_route(text: &str, duplicate_first_batch: bool) -> String {
    // "Generate {n} distinct ..." carries the requested count; the avoid
    // list length offsets titles so re-requests yield fresh ones.
    let need: usize = after_marker(text, "Generate ")
        .split_whitespace()
        .next()
        .and_then(|w| w.parse().ok())
        .unwrap_or(1);
    let offset = if text.contains("Do not reuse any of these titles:") {
        after_marker(text, "Do not reuse any of these titles:")
            .split(';')
            .count()
    } else {
        0
    };
    let mut topics = Vec::new();
    for i in 0..need {
        let n = offset + i;
        let title = if duplicate_first_batch && offset == 0 && i == 1 {
            // Repeat the first title once in the initial batch.
            "Case 0 review".to_string()
        } else {
            format!("Case {n} review")
        };
        topics.push(serde_json::json!({
            "title": title,
            "focus": format!("Management discussion for presentation {n}."),
        }));
    }
    serde_json::Value::Array(topics).to_string()
}

fn judge_route(text: &str) -> String {
    let is_reask = text.contains("could not be parsed");
    if text.contains("MALFORMED_TWICE") {
        return "this will never be json".to_string();
    }
    if text.contains("MALFORMED_ONCE") && !is_reask {
        return "{\"factual_correctness\": 9}".to_string();
    }
    let candidate = after_marker(text, "CANDIDATE NOTE:\n");
    let h = djb2(candidate);
    let likert = |shift: u64| 3 + ((h >> shift) % 3);
    let severity = |shift: u64| ["No", "Minor", "Major"][((h >> shift) % 3) as usize];
    serde_json::json!({
        "factual_correctness": likert(1),
        "completeness": likert(3),
        "clinical_relevance": likert(5),
        "coherence_organization": likert(7),
        "terminology_accuracy": likert(9),
        "readability": likert(11),
        "overall_quality": likert(13),
        "negation_detection": h.is_multiple_of(2),
        "hallucination": severity(15),
        "omission": severity(17),
        "rationale": "deterministic mock verdict",
    })
    .to_string()
}

fn chat_route(body: &str) -> (u16, String) {
    let request: serde_json::Value = match serde_json::from_str(body) {
        Ok(value) => value,
        Err(e) => return (400, format!("{{\"error\": \"bad request: {e}\"}}")),
    };
    let model = request["model"].as_str().unwrap_or_default().to_string();
    let text = all_text(&request);
    let content = match model.as_str() {
        "mock-note-base" => note_for(after_marker(&text, "Transcript:\n"), "base"),
        "mock-note-tuned" => note_for(after_marker(&text, "Transcript:\n"), "tuned"),
        "mock-topics" => topics_route(&text, false),
        "mock-topics-dup" => topics_route(&text, true),
        "mock-context" => {
            let topic = after_marker(&text, "Topic: ")
                .lines()
                .next()
                .unwrap_or("a visit");
            format!(
                "A follow-up visit regarding {topic}. The patient has stable vitals, takes levothyroxine 75 mcg daily, and brings recent lab work for review."
            )
        }
        "mock-transcript" => {
            let words = words_of(after_marker(&text, "Case context:\n"));
            format!(
                "Doctor: Thanks for coming in. Let's go over {}.\nPatient: I have been feeling more tired lately.\nDoctor: Your TSH is 6.2, so we will adjust the dose and repeat labs in six weeks.\nPatient: Understood, thank you.",
                pick(&words, 4, 4),
            )
        }
        "mock-transcript-mono" => {
            "Doctor: A single voice recounting the entire visit alone.".to_string()
        }
        "mock-critique" => {
            r#"{"completeness": 5, "clinical_relevance": 5, "realism": 4, "feedback": "solid"}"#
                .to_string()
        }
        "mock-critique-k2" => {
            let transcript = after_marker(&text, "Transcript:\n");
            if transcript.contains("[revision 2]") {
                r#"{"completeness": 5, "clinical_relevance": 5, "realism": 5, "feedback": "fixed"}"#
                    .to_string()
            } else {
                r#"{"completeness": 3, "clinical_relevance": 3, "realism": 3, "feedback": "add the lab discussion and follow-up plan"}"#
                    .to_string()
            }
        }
        "mock-critique-range" => {
            r#"{"completeness": 7, "clinical_relevance": 5, "realism": 5, "feedback": "oops"}"#
                .to_string()
        }
        "mock-revise" => {
            let transcript = after_marker(&text, "Transcript:\n");
            let next = transcript.matches("[revision").count() + 1;
            format!("{transcript}\nDoctor: Noting the amended plan as discussed. [revision {next}]")
        }
        "mock-judge" => judge_route(&text),
        "mock-empty" => String::new(),
        other => {
            return (
                500,
                format!("{{\"error\": \"unknown mock model {other}\"}}"),
            );
        }
    };
    (200, chat_body(&content, "stop"))
}

fn embeddings_route(body: &str) -> (u16, String) {
    let request: serde_json::Value = match serde_json::from_str(body) {
        Ok(value) => value,
        Err(e) => return (400, format!("{{\"error\": \"bad request: {e}\"}}")),
    };
    let text = request["text"].as_str().unwrap_or_default();
    let tokens = words_of(text);
    let mut vocab: Vec<&str> = Vec::new();
    for token in &tokens {
        if !vocab.contains(&token.as_str()) {
            vocab.push(token);
        }
    }
    let dim = vocab.len().max(1);
    let embeddings: Vec<Vec<f64>> = tokens
        .iter()
        .map(|token| {
            let mut v = vec![0.0; dim];
            let at = vocab.iter().position(|w| w == token).unwrap();
            v[at] = 1.0;
            v
        })
        .collect();
    (
        200,
        serde_json::json!({ "tokens": tokens, "embeddings": embeddings }).to_string(),
    )
}
