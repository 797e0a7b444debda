//! Text-generation backends.
//!
//! [`HttpBackend`] speaks the de-facto OpenAI-compatible wire protocol:
//! `POST {base_url}/v1/completions` for completion mode and
//! `POST {base_url}/v1/chat/completions` for chat mode, with a bearer
//! token when an API key is configured. [`StubBackend`] is a pure,
//! seedable stand-in used by tests and `--stub` runs.
//!
//! The HTTP client retries transport failures and HTTP 429/5xx with
//! exponential backoff, never retries authentication failures, and
//! bounds outstanding requests with an internal semaphore.

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use futures::stream::StreamExt;
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;
use tokio::sync::Semaphore;

use crate::corpus::EmotionLabel;
use crate::prompting::ChatRecord;

/// Environment variable naming the endpoint base URL.
pub const ENV_BASE_URL: &str = "GEN_BASE_URL";
/// Environment variable holding the API key (optional).
pub const ENV_API_KEY: &str = "GEN_API_KEY";
/// Environment variable naming the model.
pub const ENV_MODEL: &str = "GEN_MODEL";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("missing configuration: {0}")]
    MissingConfig(String),
    #[error("authentication failed (http {status})")]
    Auth { status: u16 },
    #[error("endpoint rejected request (http {status}): {detail}")]
    Http { status: u16, detail: String },
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
}

/// What the model is asked to complete.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenInput {
    /// Raw completion prompt.
    Completion(String),
    /// Chat messages; the assistant field is ignored at inference.
    Chat(ChatRecord),
}

/// Decoding parameters shared by both request modes.
///
/// Defaults are deterministic: temperature 0, 256 new tokens, no extra
/// stop strings (the endpoint stops at end-of-text), no seed.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingOptions {
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub stop: Vec<String>,
    pub seed: Option<u64>,
}

impl Default for DecodingOptions {
    fn default() -> Self {
        DecodingOptions {
            max_new_tokens: 256,
            temperature: 0.0,
            stop: Vec::new(),
            seed: None,
        }
    }
}

/// One generation request.
#[derive(Debug, Clone, PartialEq)]
pub struct GenRequest {
    pub input: GenInput,
    pub max_new_tokens: u32,
    pub temperature: f64,
    pub stop: Vec<String>,
    pub seed: Option<u64>,
}

impl GenRequest {
    pub fn completion(
        prompt: impl Into<String>,
        opts: &DecodingOptions,
    ) -> Result<Self, BackendError> {
        Self::build(GenInput::Completion(prompt.into()), opts)
    }

    pub fn chat(record: ChatRecord, opts: &DecodingOptions) -> Result<Self, BackendError> {
        Self::build(GenInput::Chat(record), opts)
    }

    fn build(input: GenInput, opts: &DecodingOptions) -> Result<Self, BackendError> {
        let request = GenRequest {
            input,
            max_new_tokens: opts.max_new_tokens,
            temperature: opts.temperature,
            stop: opts.stop.clone(),
            seed: opts.seed,
        };
        request.validate()?;
        Ok(request)
    }

    /// Check the request invariants: at least one new token, and a
    /// finite non-negative temperature.
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_new_tokens == 0 {
            return Err(BackendError::InvalidRequest(
                "max_new_tokens must be >= 1".into(),
            ));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(BackendError::InvalidRequest(
                "temperature must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Why generation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

/// One generation result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenResponse {
    pub text: String,
    pub finish_reason: FinishReason,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

impl GenResponse {
    fn error() -> Self {
        GenResponse {
            text: String::new(),
            finish_reason: FinishReason::Error,
            prompt_tokens: None,
            completion_tokens: None,
        }
    }
}

/// Connection settings for a remote backend.
#[derive(Debug, Clone)]
pub struct BackendConfig {
    pub base_url: String,
    /// Bearer token; sourced from [`ENV_API_KEY`], never from files.
    pub api_key: Option<String>,
    pub model_name: String,
    pub request_timeout: Duration,
    /// Total attempts per request (so 3 means up to 2 retries).
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// Initial backoff delay; doubles after each failed attempt.
    pub retry_backoff: Duration,
}

impl BackendConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        BackendConfig {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: None,
            model_name: model_name.into(),
            request_timeout: Duration::from_secs(120),
            max_retries: 3,
            max_in_flight: 4,
            retry_backoff: Duration::from_millis(500),
        }
    }

    /// Read `GEN_BASE_URL`, `GEN_MODEL`, and the optional `GEN_API_KEY`.
    pub fn from_env() -> Result<Self, BackendError> {
        let base_url = std::env::var(ENV_BASE_URL)
            .map_err(|_| BackendError::MissingConfig(format!("{ENV_BASE_URL} is not set")))?;
        let model = std::env::var(ENV_MODEL)
            .map_err(|_| BackendError::MissingConfig(format!("{ENV_MODEL} is not set")))?;
        let mut config = BackendConfig::new(base_url, model);
        config.api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(config)
    }
}

/// Anything that can serve generation requests.
#[async_trait]
pub trait Generator: Send + Sync {
    async fn generate(&self, request: &GenRequest) -> Result<GenResponse, BackendError>;
}

/// Generate a batch, at most `max_in_flight` requests outstanding at a
/// time. Output order always matches input order regardless of
/// completion order.
pub async fn generate_all(
    generator: &dyn Generator,
    requests: &[GenRequest],
    max_in_flight: usize,
) -> Vec<Result<GenResponse, BackendError>> {
    futures::stream::iter(requests.iter().map(|request| generator.generate(request)))
        .buffered(max_in_flight.max(1))
        .collect()
        .await
}

/// Raw HTTP reply, decoupled from the concrete HTTP client so tests can
/// script failures.
#[derive(Debug, Clone)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Transport-level failure (connect, timeout, broken stream). Always
/// considered transient.
#[derive(Debug, Error)]
#[error("transport failure: {0}")]
pub struct TransportError(pub String);

#[async_trait]
pub trait Transport: Send + Sync {
    async fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &serde_json::Value,
    ) -> Result<HttpReply, TransportError>;
}

/// [`Transport`] backed by `reqwest`.
pub struct ReqwestTransport {
    client: reqwest::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::MissingConfig(format!("http client: {e}")))?;
        Ok(ReqwestTransport { client })
    }
}

#[async_trait]
impl Transport for ReqwestTransport {
    async fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &serde_json::Value,
    ) -> Result<HttpReply, TransportError> {
        let mut request = self.client.post(url).json(body);
        if let Some(key) = api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .await
            .map_err(|e| TransportError(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .text()
            .await
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

#[derive(Deserialize)]
struct ApiResponse {
    choices: Vec<ApiChoice>,
    #[serde(default)]
    usage: Option<ApiUsage>,
}

#[derive(Deserialize)]
struct ApiChoice {
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    message: Option<ApiMessage>,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ApiMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct ApiUsage {
    #[serde(default)]
    prompt_tokens: Option<u64>,
    #[serde(default)]
    completion_tokens: Option<u64>,
}

/// Remote backend client. Shareable across concurrent callers; enforces
/// `max_in_flight` internally (a slot is held for a request's whole
/// retry sequence).
pub struct HttpBackend<T: Transport = ReqwestTransport> {
    config: BackendConfig,
    transport: T,
    permits: Arc<Semaphore>,
}

impl HttpBackend<ReqwestTransport> {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        let transport = ReqwestTransport::new(config.request_timeout)?;
        Ok(Self::with_transport(config, transport))
    }
}

impl<T: Transport> HttpBackend<T> {
    pub fn with_transport(config: BackendConfig, transport: T) -> Self {
        let permits = Arc::new(Semaphore::new(config.max_in_flight.max(1)));
        HttpBackend {
            config,
            transport,
            permits,
        }
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn endpoint_and_body(&self, request: &GenRequest) -> (String, serde_json::Value) {
        let mut body = json!({
            "model": self.config.model_name,
            "max_tokens": request.max_new_tokens,
            "temperature": request.temperature,
        });
        if !request.stop.is_empty() {
            body["stop"] = json!(request.stop);
        }
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }
        match &request.input {
            GenInput::Completion(prompt) => {
                body["prompt"] = json!(prompt);
                (format!("{}/v1/completions", self.config.base_url), body)
            }
            GenInput::Chat(record) => {
                let mut messages = Vec::new();
                if !record.system.is_empty() {
                    messages.push(json!({"role": "system", "content": record.system}));
                }
                messages.push(json!({"role": "user", "content": record.user}));
                body["messages"] = json!(messages);
                (
                    format!("{}/v1/chat/completions", self.config.base_url),
                    body,
                )
            }
        }
    }

    fn parse_reply(&self, request: &GenRequest, body: &str) -> Result<GenResponse, BackendError> {
        let parsed: ApiResponse = serde_json::from_str(body)
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        let choice = parsed
            .choices
            .first()
            .ok_or_else(|| BackendError::MalformedResponse("no choices".into()))?;
        let text = match &request.input {
            GenInput::Completion(_) => choice.text.clone(),
            GenInput::Chat(_) => choice.message.as_ref().and_then(|m| m.content.clone()),
        }
        .ok_or_else(|| BackendError::MalformedResponse("choice carries no text".into()))?;
        let finish_reason = match choice.finish_reason.as_deref() {
            Some("length") => FinishReason::Length,
            _ => FinishReason::Stop,
        };
        let (prompt_tokens, completion_tokens) = match &parsed.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => (None, None),
        };
        Ok(GenResponse {
            text: strip_stop_suffixes(text, &request.stop),
            finish_reason,
            prompt_tokens,
            completion_tokens,
        })
    }
}

/// Remove any configured stop sequences from the tail of the text.
fn strip_stop_suffixes(mut text: String, stop: &[String]) -> String {
    loop {
        let mut stripped = false;
        for s in stop {
            if !s.is_empty() {
                if let Some(rest) = text.strip_suffix(s.as_str()) {
                    text.truncate(rest.len());
                    stripped = true;
                }
            }
        }
        if !stripped {
            return text;
        }
    }
}

#[async_trait]
impl<T: Transport> Generator for HttpBackend<T> {
    /// Dispatch one request.
    ///
    /// Transport failures and HTTP 429/5xx are retried up to
    /// `max_retries` attempts with exponential backoff; exhaustion
    /// yields `Ok` with `finish_reason = Error`. Authentication
    /// failures and malformed bodies fail immediately.
    async fn generate(&self, request: &GenRequest) -> Result<GenResponse, BackendError> {
        request.validate()?;
        let _permit = self
            .permits
            .acquire()
            .await
            .expect("semaphore never closed");
        let (url, body) = self.endpoint_and_body(request);
        let attempts = self.config.max_retries.max(1);
        for attempt in 1..=attempts {
            match self
                .transport
                .post_json(&url, self.config.api_key.as_deref(), &body)
                .await
            {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    return self.parse_reply(request, &reply.body);
                }
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    return Err(BackendError::Auth {
                        status: reply.status,
                    });
                }
                Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                    // transient; fall through to backoff
                }
                Ok(reply) => {
                    return Err(BackendError::Http {
                        status: reply.status,
                        detail: reply.body.chars().take(200).collect(),
                    });
                }
                Err(_transport) => {
                    // transient; fall through to backoff
                }
            }
            if attempt < attempts {
                let delay = self.config.retry_backoff * 2u32.saturating_pow(attempt - 1);
                tokio::time::sleep(delay).await;
            }
        }
        Ok(GenResponse::error())
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the given bytes; fixed here so stub outputs never depend
/// on the standard library's unstable default hasher.
fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut hash = FNV_OFFSET;
    for byte in bytes {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn hashed_label(text: &str, stub_seed: u64) -> EmotionLabel {
    let hash = fnv1a(text.bytes().chain(stub_seed.to_le_bytes()));
    EmotionLabel::DATASET_ORDER[(hash % 6) as usize]
}

/// Parse the answer span out of a stage-1 style prompt
/// (`Question: ... Answer: {a} Reasoning: `).
fn answer_from_stage1_prompt(prompt: &str) -> Option<&str> {
    let without_suffix = prompt.strip_suffix(" Reasoning: ")?;
    if !without_suffix.starts_with("Question: ") {
        return None;
    }
    let idx = without_suffix.rfind(" Answer: ")?;
    let answer = &without_suffix[idx + " Answer: ".len()..];
    (!answer.is_empty()).then_some(answer)
}

/// Deterministic test-double generation: a pure function of the request
/// bytes and `stub_seed`.
///
/// Completion prompts matching the stage-1 template yield
/// `Because the text indicates {answer}, the label is {answer}.` with
/// the answer parsed from the prompt. Chat requests (and unrecognized
/// completion prompts) yield a label word chosen by hashing the user
/// text with the seed.
pub fn stub_generate(request: &GenRequest, stub_seed: u64) -> GenResponse {
    let text = match &request.input {
        GenInput::Completion(prompt) => match answer_from_stage1_prompt(prompt) {
            Some(answer) => format!("Because the text indicates {answer}, the label is {answer}."),
            None => hashed_label(prompt, stub_seed).as_str().to_string(),
        },
        GenInput::Chat(record) => hashed_label(&record.user, stub_seed).as_str().to_string(),
    };
    GenResponse {
        text,
        finish_reason: FinishReason::Stop,
        prompt_tokens: None,
        completion_tokens: None,
    }
}

/// [`Generator`] wrapper around [`stub_generate`].
pub struct StubBackend {
    seed: u64,
}

impl StubBackend {
    pub fn new(seed: u64) -> Self {
        StubBackend { seed }
    }
}

#[async_trait]
impl Generator for StubBackend {
    async fn generate(&self, request: &GenRequest) -> Result<GenResponse, BackendError> {
        request.validate()?;
        Ok(stub_generate(request, self.seed))
    }
}
