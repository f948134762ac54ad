//! Chat-completion access to the registered models.
//!
//! Real models are reached over an OpenAI-compatible endpoint with bounded
//! exponential backoff and a per-model token bucket. Mock models replay a
//! script, or run the built-in simulated player (`script = "sim:<skill>"`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use gamearena_core::chat::{ChatMessage, ChatRole};
use gamearena_core::pairing::{ApiFlavor, InferenceParams, ModelRef};
use gamearena_core::prompts::retro_prompt;
use gamearena_core::GameKind;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ArenaConfig, GatewaySettings, ModelEntry};
use crate::sim::{SimAssets, SimModel};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("model call exceeded its {0:?} budget")]
    Timeout(Duration),
    #[error("provider returned status {status}: {message}")]
    Provider { status: u16, message: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("credential variable `{0}` is not set")]
    MissingCredential(String),
    #[error("mock script exhausted at turn {turn}")]
    ScriptExhausted { turn: usize },
    #[error("cannot load model script: {0}")]
    Script(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
}

impl GatewayError {
    /// Worth another attempt: rate limiting, server errors, broken transport.
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Transport(_) => true,
            GatewayError::Provider { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A chat model. Implementations are shared across sessions and must keep
/// per-call state local.
pub trait ChatModel: Send + Sync {
    fn id(&self) -> &str;

    /// Returns the assistant reply to `messages` (user first, alternating
    /// roles) under `system_prompt`.
    fn complete(
        &self,
        system_prompt: &str,
        messages: &[ChatMessage],
        params: &InferenceParams,
    ) -> Result<String, GatewayError>;
}

pub fn validate_messages(messages: &[ChatMessage]) -> Result<(), GatewayError> {
    for (i, m) in messages.iter().enumerate() {
        let expected = if i % 2 == 0 { ChatRole::User } else { ChatRole::Assistant };
        if m.role != expected {
            return Err(GatewayError::InvalidRequest(format!(
                "message {i} has role {:?}, expected {expected:?}",
                m.role
            )));
        }
    }
    Ok(())
}

/// Hex SHA-256 over the system prompt and every message.
pub fn transcript_digest(system_prompt: &str, messages: &[ChatMessage]) -> String {
    let mut h = Sha256::new();
    h.update(b"system\0");
    h.update(system_prompt.as_bytes());
    for m in messages {
        h.update(b"\0");
        h.update(format!("{:?}", m.role).as_bytes());
        h.update(b"\0");
        h.update(m.content.as_bytes());
    }
    hex::encode(h.finalize())
}

/// The game whose retrospective prompt ends the request, if any.
pub fn retro_request_game(messages: &[ChatMessage]) -> Option<GameKind> {
    let last = messages.last().filter(|m| m.role == ChatRole::User)?;
    GameKind::ALL.into_iter().find(|g| last.content.contains(retro_prompt(*g)))
}

pub trait Clock: Send + Sync {
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    start: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock { start: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.start.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d)
    }
}

/// Virtual time: `sleep` advances the clock instantly and is recorded.
#[derive(Debug, Default)]
pub struct ManualClock {
    now: Mutex<Duration>,
    sleeps: Mutex<Vec<Duration>>,
}

impl ManualClock {
    pub fn advance(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.sleeps.lock().unwrap().clone()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        self.sleeps.lock().unwrap().push(d);
        self.advance(d);
    }
}

#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    tokens: f64,
    per_sec: f64,
    last: Duration,
}

impl TokenBucket {
    pub fn per_minute(rate: u32, now: Duration) -> Self {
        let capacity = f64::from(rate.max(1));
        TokenBucket { capacity, tokens: capacity, per_sec: capacity / 60.0, last: now }
    }

    /// Takes a token, or returns how long to wait for one.
    pub fn try_take(&mut self, now: Duration) -> Result<(), Duration> {
        let dt = now.saturating_sub(self.last).as_secs_f64();
        self.tokens = (self.tokens + dt * self.per_sec).min(self.capacity);
        self.last = now;
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - self.tokens) / self.per_sec))
        }
    }
}

pub struct HttpRequest<'a> {
    pub url: &'a str,
    pub bearer: Option<&'a str>,
    pub body: &'a Value,
    pub timeout: Duration,
}

/// Posts a JSON body and returns (status, response body).
pub trait Transport: Send + Sync {
    fn post_json(&self, req: HttpRequest<'_>) -> Result<(u16, String), String>;
}

/// Blocking HTTP transport. The client is built on first use so it is never
/// created or dropped on an async executor thread.
#[derive(Default)]
pub struct ReqwestTransport {
    client: OnceLock<reqwest::blocking::Client>,
}

impl Transport for ReqwestTransport {
    fn post_json(&self, req: HttpRequest<'_>) -> Result<(u16, String), String> {
        let client = self.client.get_or_init(reqwest::blocking::Client::new);
        let mut rb = client.post(req.url).timeout(req.timeout).json(req.body);
        if let Some(token) = req.bearer {
            rb = rb.bearer_auth(token);
        }
        let resp = rb.send().map_err(|e| e.without_url().to_string())?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| e.without_url().to_string())?;
        Ok((status, text))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_backoff: Duration,
    pub total_timeout: Duration,
}

impl From<&GatewaySettings> for RetryPolicy {
    fn from(s: &GatewaySettings) -> Self {
        RetryPolicy { max_retries: s.max_retries, base_backoff: s.base_backoff(), total_timeout: s.total_timeout() }
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        (&GatewaySettings::default()).into()
    }
}

/// Client for one model behind an OpenAI-compatible chat endpoint. The API
/// key is read from the environment on every call and never stored.
pub struct OpenAiClient {
    model: ModelRef,
    url: String,
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    retry: RetryPolicy,
    bucket: Option<Mutex<TokenBucket>>,
}

impl fmt::Debug for OpenAiClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpenAiClient")
            .field("model", &self.model.id)
            .field("url", &self.url)
            .field("retry", &self.retry)
            .finish_non_exhaustive()
    }
}

fn chat_url(endpoint: &str) -> String {
    let e = endpoint.trim_end_matches('/');
    if e.ends_with("/chat/completions") {
        e.to_string()
    } else {
        format!("{e}/chat/completions")
    }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

impl OpenAiClient {
    pub fn new(
        model: ModelRef,
        transport: Arc<dyn Transport>,
        clock: Arc<dyn Clock>,
        retry: RetryPolicy,
        rate_per_minute: Option<u32>,
    ) -> Result<Self, GatewayError> {
        let endpoint = model
            .endpoint
            .as_deref()
            .ok_or_else(|| GatewayError::InvalidRequest(format!("model `{}` has no endpoint", model.id)))?;
        let url = chat_url(endpoint);
        let bucket = rate_per_minute.map(|r| Mutex::new(TokenBucket::per_minute(r, clock.now())));
        Ok(OpenAiClient { model, url, transport, clock, retry, bucket })
    }

    fn request_body(&self, system_prompt: &str, messages: &[ChatMessage], params: &InferenceParams) -> Value {
        let mut msgs = vec![json!({"role": "system", "content": system_prompt})];
        msgs.extend(messages.iter().map(|m| json!({"role": m.role, "content": m.content})));
        let mut body = json!({
            "model": self.model.upstream_model.as_deref().unwrap_or(&self.model.id),
            "messages": msgs,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_output_tokens,
        });
        if let Some(seed) = params.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn wait_for_token(&self, deadline: Duration) -> Result<(), GatewayError> {
        let Some(bucket) = &self.bucket else { return Ok(()) };
        loop {
            let wait = match bucket.lock().unwrap().try_take(self.clock.now()) {
                Ok(()) => return Ok(()),
                Err(wait) => wait,
            };
            if self.clock.now() + wait >= deadline {
                return Err(GatewayError::Timeout(self.retry.total_timeout));
            }
            self.clock.sleep(wait);
        }
    }

    fn parse_reply(body: &str) -> Result<String, GatewayError> {
        let v: Value = serde_json::from_str(body).map_err(|e| GatewayError::Malformed(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| GatewayError::Malformed("no choices[0].message.content".into()))
    }
}

fn scrub(text: String, secret: Option<&str>) -> String {
    match secret {
        Some(s) if !s.is_empty() => text.replace(s, "[redacted]"),
        _ => text,
    }
}

impl ChatModel for OpenAiClient {
    fn id(&self) -> &str {
        &self.model.id
    }

    fn complete(
        &self,
        system_prompt: &str,
        messages: &[ChatMessage],
        params: &InferenceParams,
    ) -> Result<String, GatewayError> {
        validate_messages(messages)?;
        let key = match &self.model.auth_env {
            Some(var) => Some(std::env::var(var).map_err(|_| GatewayError::MissingCredential(var.clone()))?),
            None => None,
        };
        let body = self.request_body(system_prompt, messages, params);
        let deadline = self.clock.now() + self.retry.total_timeout;
        let mut attempt = 0u32;
        loop {
            self.wait_for_token(deadline)?;
            let remaining = deadline.saturating_sub(self.clock.now());
            if remaining.is_zero() {
                return Err(GatewayError::Timeout(self.retry.total_timeout));
            }
            let req = HttpRequest { url: &self.url, bearer: key.as_deref(), body: &body, timeout: remaining };
            let err = match self.transport.post_json(req) {
                Ok((status, text)) if (200..300).contains(&status) => return Self::parse_reply(&text),
                Ok((status, text)) => {
                    GatewayError::Provider { status, message: scrub(truncate(&text, 200), key.as_deref()) }
                }
                Err(e) => GatewayError::Transport(scrub(e, key.as_deref())),
            };
            if !err.is_retryable() || attempt >= self.retry.max_retries {
                return Err(err);
            }
            let backoff = self.retry.base_backoff * 2u32.saturating_pow(attempt);
            if self.clock.now() + backoff >= deadline {
                return Err(GatewayError::Timeout(self.retry.total_timeout));
            }
            tracing::warn!(model = %self.model.id, attempt, error = %err, "retrying model call");
            self.clock.sleep(backoff);
            attempt += 1;
        }
    }
}

/// Replies for a mock model.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    /// In-game replies, indexed by the number of model turns already in
    /// the request.
    #[serde(default)]
    pub replies: Vec<String>,
    /// Retrospective answers, keyed the same way.
    #[serde(default)]
    pub retro: BTreeMap<usize, String>,
    /// Replies keyed by [`transcript_digest`]; checked first.
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct MockModel {
    id: String,
    script: MockScript,
}

impl MockModel {
    pub fn new(id: &str, script: MockScript) -> Self {
        MockModel { id: id.to_string(), script }
    }

    pub fn load(id: &str, path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Script(format!("{}: {e}", path.display())))?;
        let script = serde_json::from_str(&text).map_err(|e| GatewayError::Script(format!("{}: {e}", path.display())))?;
        Ok(MockModel::new(id, script))
    }
}

impl ChatModel for MockModel {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(
        &self,
        system_prompt: &str,
        messages: &[ChatMessage],
        _params: &InferenceParams,
    ) -> Result<String, GatewayError> {
        validate_messages(messages)?;
        let digest = transcript_digest(system_prompt, messages);
        if let Some(r) = self.script.overrides.get(&digest) {
            return Ok(r.clone());
        }
        let turn = messages.iter().filter(|m| m.role == ChatRole::Assistant).count();
        let reply = if retro_request_game(messages).is_some() {
            self.script.retro.get(&turn)
        } else {
            self.script.replies.get(turn)
        };
        reply.cloned().ok_or(GatewayError::ScriptExhausted { turn })
    }
}

/// Builds the client for one registry entry.
pub fn build_model(
    entry: &ModelEntry,
    settings: &GatewaySettings,
    assets: &Arc<SimAssets>,
) -> Result<Arc<dyn ChatModel>, GatewayError> {
    let m = &entry.model;
    m.validate().map_err(|e| GatewayError::InvalidRequest(e.to_string()))?;
    match m.api_flavor {
        ApiFlavor::OpenaiCompatible => Ok(Arc::new(OpenAiClient::new(
            m.clone(),
            Arc::new(ReqwestTransport::default()),
            Arc::new(SystemClock::default()),
            settings.into(),
            entry.rate_per_minute,
        )?)),
        ApiFlavor::Mock => {
            let script = m.script.as_deref().unwrap_or_default();
            if let Some(skill) = script.strip_prefix("sim:") {
                let skill: f64 = skill
                    .parse()
                    .ok()
                    .filter(|s| (0.0..=1.0).contains(s))
                    .ok_or_else(|| GatewayError::Script(format!("bad skill in `{script}`")))?;
                Ok(Arc::new(SimModel::new(&m.id, skill, assets.clone())))
            } else {
                Ok(Arc::new(MockModel::load(&m.id, Path::new(script))?))
            }
        }
    }
}

/// All registered models by id.
#[derive(Clone, Default)]
pub struct Gateway {
    models: BTreeMap<String, Arc<dyn ChatModel>>,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway").field("models", &self.models.keys().collect::<Vec<_>>()).finish()
    }
}

impl Gateway {
    pub fn from_config(cfg: &ArenaConfig, assets: Arc<SimAssets>) -> Result<Self, GatewayError> {
        let mut g = Gateway::default();
        for entry in &cfg.models {
            g.insert(build_model(entry, &cfg.gateway, &assets)?);
        }
        Ok(g)
    }

    pub fn insert(&mut self, model: Arc<dyn ChatModel>) {
        self.models.insert(model.id().to_string(), model);
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn ChatModel>, GatewayError> {
        self.models.get(id).cloned().ok_or_else(|| GatewayError::UnknownModel(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }
}
