//! OpenAI-compatible HTTP backends.
//!
//! Summaries go to `POST {endpoint}/chat/completions`, embeddings to
//! `POST {endpoint}/embeddings`. The exact request and response shapes are
//! documented in `docs/http-protocol.md`. Transient failures (transport
//! errors, timeouts, 429 and 5xx) are retried with exponential backoff; both
//! requests are idempotent.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendError, Embedder, Summarizer};

#[derive(Debug, Clone)]
pub struct HttpOptions {
    /// Base URL including the version prefix, e.g. `http://localhost:8000/v1`.
    pub endpoint: String,
    pub model: String,
    pub timeout: Duration,
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    pub max_in_flight: usize,
    pub api_key_env: Option<String>,
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Limiter {
    available: Mutex<usize>,
    released: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Self {
            available: Mutex::new(n.max(1)),
            released: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut available = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *available == 0 {
            available = self.released.wait(available).unwrap_or_else(|e| e.into_inner());
        }
        *available -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut available = self.0.available.lock().unwrap_or_else(|e| e.into_inner());
        *available += 1;
        self.0.released.notify_one();
    }
}

struct HttpClient {
    options: HttpOptions,
    agent: ureq::Agent,
    limiter: Limiter,
    backoff: Duration,
}

impl HttpClient {
    fn new(options: HttpOptions) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(options.timeout))
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
            limiter: Limiter::new(options.max_in_flight),
            backoff: Duration::from_millis(250),
            options,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.options.endpoint.trim_end_matches('/'), path)
    }

    fn api_key(&self) -> Result<Option<String>, BackendError> {
        match &self.options.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| BackendError::Config(format!("environment variable {var} is not set"))),
        }
    }

    fn post_once<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
        &self,
        url: &str,
        body: &Req,
        key: Option<&str>,
    ) -> Result<Resp, BackendError> {
        let mut request = self.agent.post(url);
        if let Some(key) = key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let response = request.send_json(body).map_err(map_ureq_error)?;
        response
            .into_body()
            .read_json::<Resp>()
            .map_err(|e| BackendError::Protocol(e.to_string()))
    }

    fn post<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        body: &Req,
    ) -> Result<Resp, BackendError> {
        let key = self.api_key()?;
        let url = self.url(path);
        let _permit = self.limiter.acquire();
        let attempts = self.options.max_attempts.max(1);
        let mut delay = self.backoff;
        let mut attempt = 1;
        loop {
            match self.post_once(&url, body, key.as_deref()) {
                Ok(resp) => return Ok(resp),
                Err(e) if e.is_transient() && attempt < attempts => {
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

fn map_ureq_error(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::StatusCode(status) => BackendError::Status { status },
        ureq::Error::Timeout(_) => BackendError::Timeout,
        ureq::Error::Json(e) => BackendError::Protocol(e.to_string()),
        other => BackendError::Transport(other.to_string()),
    }
}

#[derive(Debug, Serialize)]
pub struct ChatMessage<'a> {
    pub role: &'a str,
    pub content: &'a str,
}

#[derive(Debug, Serialize)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub messages: Vec<ChatMessage<'a>>,
    pub temperature: f32,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Debug, Deserialize)]
struct ChatReply {
    content: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct EmbeddingRequest<'a> {
    pub model: &'a str,
    pub input: &'a [&'a str],
}

#[derive(Debug, Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Debug, Deserialize)]
struct EmbeddingItem {
    index: usize,
    embedding: Vec<f32>,
}

pub struct HttpSummarizer {
    client: HttpClient,
    prompt: String,
}

impl HttpSummarizer {
    pub fn new(options: HttpOptions, prompt: String) -> Self {
        Self {
            client: HttpClient::new(options),
            prompt,
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.client.backoff = backoff;
        self
    }
}

/// Joins the group of texts into the single user message.
pub fn summary_user_message(texts: &[&str]) -> String {
    texts.join("\n\n")
}

impl Summarizer for HttpSummarizer {
    fn id(&self) -> String {
        format!("http-chat:{}", self.client.options.model)
    }

    fn summarize(&self, texts: &[&str]) -> Result<String, BackendError> {
        if texts.is_empty() {
            return Err(BackendError::Other("nothing to summarize".into()));
        }
        let user = summary_user_message(texts);
        let request = ChatRequest {
            model: &self.client.options.model,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: &self.prompt,
                },
                ChatMessage {
                    role: "user",
                    content: &user,
                },
            ],
            temperature: 0.0,
        };
        let response: ChatResponse = self.client.post("chat/completions", &request)?;
        let content = response
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Protocol("response has no message content".into()))?;
        let content = content.trim();
        if content.is_empty() {
            return Err(BackendError::Protocol("empty summary".into()));
        }
        Ok(content.to_string())
    }
}

pub struct HttpEmbedder {
    client: HttpClient,
}

impl HttpEmbedder {
    pub fn new(options: HttpOptions) -> Self {
        Self {
            client: HttpClient::new(options),
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.client.backoff = backoff;
        self
    }
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> String {
        format!("http-embeddings:{}", self.client.options.model)
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let request = EmbeddingRequest {
            model: &self.client.options.model,
            input: texts,
        };
        let response: EmbeddingResponse = self.client.post("embeddings", &request)?;
        if response.data.len() != texts.len() {
            return Err(BackendError::Protocol(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                response.data.len()
            )));
        }
        let mut out: Vec<Option<Vec<f32>>> = vec![None; texts.len()];
        for item in response.data {
            let slot = out
                .get_mut(item.index)
                .ok_or_else(|| BackendError::Protocol(format!("embedding index {} out of range", item.index)))?;
            *slot = Some(item.embedding);
        }
        out.into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| BackendError::Protocol(format!("missing embedding {i}"))))
            .collect()
    }
}
