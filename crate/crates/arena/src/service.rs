//! HTTP API under `/v1` for the web client.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/v1/sessions` | `{"game"?: "akinator", "seed"?: 7}` |
//! | GET | `/v1/sessions/{id}` | |
//! | POST | `/v1/sessions/{id}/messages` | `{"text": "Yes"}`; an empty body retries a failed model move |
//! | POST | `/v1/sessions/{id}/outcome` | `{"feedback": "confirmed_correct", "revealed_secret"?: "a thimble"}` |
//! | GET | `/v1/leaderboard?game=&family=` | |
//! | GET | `/v1/health` | |
//!
//! State-changing requests honour an `Idempotency-Key` header.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gamearena_core::game::{Awaiting, UserTurnEffect, AKINATOR_OPENING};
use gamearena_core::metrics::FirstCorrectRule;
use gamearena_core::pairing::{pair_randomly, ModelRef, PairingError, PromptRef};
use gamearena_core::{
    Feedback, GameConfig, GameError, GameKind, Outcome, Role, SecretSource, Session, SessionId, Status,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::Semaphore;

use crate::config::{ArenaConfig, ConfigError};
use crate::driver::{model_move, system_prompt, DriveError};
use crate::gateway::{Gateway, GatewayError};
use crate::report::{compute, leaderboard, Family, LeaderboardTable, ReportError};
use crate::sim::{ontology_classifier, Ontology};
use crate::store::{CorpusFilter, SessionRecord, Store, StoreError};

/// Milliseconds since the Unix epoch.
pub type NowFn = Arc<dyn Fn() -> i64 + Send + Sync>;

pub fn system_now() -> NowFn {
    Arc::new(|| chrono::Utc::now().timestamp_millis())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    pub retryable: bool,
    #[serde(skip)]
    pub status: u16,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>, retryable: bool) -> Self {
        ApiError { code: code.into(), message: message.into(), retryable, status: status.as_u16() }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session `{id}`"), false)
    }

    fn bad_body(msg: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_body", msg, false)
    }

    fn internal(msg: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", msg, true)
    }
}

impl From<GameError> for ApiError {
    fn from(e: GameError) -> Self {
        let status = match e {
            GameError::SessionFinished
            | GameError::OutOfTurn(_)
            | GameError::ConfirmViaFeedback
            | GameError::NoPendingPrediction
            | GameError::GameContinues
            | GameError::DuplicateSessionId(_) => StatusCode::CONFLICT,
            GameError::EmptyMessage
            | GameError::CharLimitExceeded { .. }
            | GameError::InvalidAnswer { .. }
            | GameError::StatementMismatch
            | GameError::RevealRequired => StatusCode::UNPROCESSABLE_ENTITY,
            GameError::InvalidConfig(_)
            | GameError::EmptyWordList
            | GameError::PairingMismatch { .. }
            | GameError::InvalidSecret(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string(), false)
    }
}

impl From<GatewayError> for ApiError {
    // Provider messages may name the model, so only the kind is surfaced.
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Timeout(_) => ApiError::new(
                StatusCode::GATEWAY_TIMEOUT,
                "model_timeout",
                "the model did not answer in time; retry with an empty message",
                true,
            ),
            e if e.is_retryable() => ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "model_unavailable",
                "the model is temporarily unavailable; retry with an empty message",
                true,
            ),
            _ => ApiError::new(StatusCode::BAD_GATEWAY, "model_failure", "the model call failed", true),
        }
    }
}

impl From<DriveError> for ApiError {
    fn from(e: DriveError) -> Self {
        match e {
            DriveError::Game(g) => g.into(),
            DriveError::Gateway(g) => g.into(),
            DriveError::UnknownPrompt(_) => ApiError::internal("session prompt is not registered"),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        tracing::error!(error = %e, "store failure");
        ApiError::internal("storage failure")
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::NoData => ApiError::new(StatusCode::NOT_FOUND, "no_data", e.to_string(), false),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiTurn {
    pub index: u32,
    pub role: Role,
    pub content: String,
}

/// What a client sees of a session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSessionView {
    pub session_id: SessionId,
    pub game: GameKind,
    pub status: Status,
    pub awaiting: Awaiting,
    pub transcript: Vec<ApiTurn>,
    pub rounds_used: u32,
    pub rounds_remaining: u32,
    /// Taboo: character limit of the next message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_budget: Option<u32>,
    /// Taboo: the assigned word, for the human player only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret_word: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_prediction: Option<String>,
    /// The last model move failed and can be retried.
    pub pending_retry: bool,
    /// Hidden while the session is active under blind play.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    /// Rule that ended the session early, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ended_by: Option<String>,
}

struct Live {
    session: Session,
    pending_retry: bool,
    ended_by: Option<String>,
    last_activity: i64,
}

impl Live {
    fn view(&self, blind: bool) -> ApiSessionView {
        let s = &self.session;
        ApiSessionView {
            session_id: s.session_id.clone(),
            game: s.game,
            status: s.status,
            awaiting: s.awaiting,
            transcript: s
                .turns
                .iter()
                .map(|t| ApiTurn { index: t.index, role: t.role, content: t.content.clone() })
                .collect(),
            rounds_used: s.round_count,
            rounds_remaining: s.rounds_remaining(),
            char_budget: s.char_budget(),
            secret_word: (s.game == GameKind::Taboo).then(|| s.secret.target_text().unwrap_or_default().to_string()),
            pending_prediction: s.pending_prediction.as_ref().map(|p| p.text()),
            pending_retry: self.pending_retry,
            model: (!blind || s.is_finished()).then(|| s.model_ref.clone()),
            outcome: s.outcome.clone(),
            ended_by: self.ended_by.clone(),
        }
    }
}

type CachedResponse = (u16, Value, i64);

/// Shared state of a running service.
pub struct AppState {
    blind_play: bool,
    expiry_ms: i64,
    params: gamearena_core::InferenceParams,
    models: Vec<ModelRef>,
    prompts: Arc<Vec<PromptRef>>,
    taboo_words: Vec<String>,
    gateway: Arc<Gateway>,
    store: Arc<Store>,
    ontology: Arc<Ontology>,
    sessions: Mutex<HashMap<SessionId, Arc<tokio::sync::Mutex<Live>>>>,
    idempotent: Mutex<HashMap<String, CachedResponse>>,
    model_slots: Arc<Semaphore>,
    now: NowFn,
}

impl AppState {
    pub fn new(cfg: &ArenaConfig, gateway: Gateway, store: Store, now: NowFn) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(AppState {
            blind_play: cfg.blind_play,
            expiry_ms: (cfg.session_expiry_secs as i64).saturating_mul(1000),
            params: cfg.params.clone(),
            models: cfg.model_refs(),
            prompts: Arc::new(cfg.prompt_pool()?),
            taboo_words: cfg.taboo_words()?,
            gateway: Arc::new(gateway),
            store: Arc::new(store),
            ontology: Arc::new(Ontology::builtin()),
            sessions: Mutex::new(HashMap::new()),
            idempotent: Mutex::new(HashMap::new()),
            model_slots: Arc::new(Semaphore::new(cfg.gateway.max_concurrency)),
            now,
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    fn live(&self, id: &str) -> Option<Arc<tokio::sync::Mutex<Live>>> {
        self.sessions.lock().expect("session map").get(&SessionId(id.to_string())).cloned()
    }

    /// Runs one model move off the async runtime. On failure the session is
    /// left as it was and flagged for retry.
    async fn model_turn(&self, live: &mut Live) -> Result<(), ApiError> {
        let _permit = self.model_slots.acquire().await.map_err(|_| ApiError::internal("shutting down"))?;
        let model = self.gateway.get(&live.session.model_ref).map_err(ApiError::from)?;
        let prompts = self.prompts.clone();
        let mut session = live.session.clone();
        let res = tokio::task::spawn_blocking(move || {
            let prompt = system_prompt(&session, &prompts)?;
            let c = model_move(&mut session, model.as_ref(), prompt)?;
            Ok::<_, DriveError>((session, c))
        })
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
        match res {
            Ok((session, c)) => {
                live.session = session;
                live.pending_retry = false;
                if c.uttered_secret && live.session.is_finished() {
                    live.ended_by = Some("model_said_secret".into());
                }
                Ok(())
            }
            Err(e @ DriveError::Gateway(_)) => {
                tracing::warn!(session = %live.session.session_id, "model move failed");
                live.pending_retry = true;
                Err(e.into())
            }
            Err(e) => Err(e.into()),
        }
    }

    async fn persist_if_finished(&self, live: &Live) -> Result<(), ApiError> {
        if !live.session.is_finished() {
            return Ok(());
        }
        let store = self.store.clone();
        let record = SessionRecord::new(live.session.clone(), None);
        tokio::task::spawn_blocking(move || store.append(record))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))??;
        Ok(())
    }

    /// Abandons and persists active sessions idle for longer than the expiry.
    /// Returns how many were closed.
    pub async fn sweep_expired(&self) -> usize {
        let now = (self.now)();
        let entries: Vec<Arc<tokio::sync::Mutex<Live>>> =
            self.sessions.lock().expect("session map").values().cloned().collect();
        let mut closed = 0;
        for e in entries {
            let mut live = e.lock().await;
            if live.session.is_finished() || now - live.last_activity < self.expiry_ms {
                continue;
            }
            if live.session.abandon().is_ok() {
                live.ended_by = Some("expired".into());
                live.last_activity = now;
                if let Err(err) = self.persist_if_finished(&live).await {
                    tracing::error!(code = %err.code, "could not persist expired session");
                }
                closed += 1;
            }
        }
        self.idempotent.lock().expect("idempotency cache").retain(|_, v| now - v.2 < self.expiry_ms);
        // Finished sessions stay readable from the store once evicted.
        self.sessions.lock().expect("session map").retain(|_, e| {
            e.try_lock().map_or(true, |l| !l.session.is_finished() || now - l.last_activity < self.expiry_ms)
        });
        closed
    }
}

fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_body(e.to_string()))
}

/// Replays the cached response for a repeated idempotency key, or runs `f`
/// and caches its result.
async fn idempotent<F, Fut>(state: &AppState, headers: &HeaderMap, scope: String, f: F) -> Response
where
    F: FnOnce() -> Fut,
    Fut: std::future::Future<Output = Result<(StatusCode, Value), ApiError>>,
{
    let key = headers
        .get("idempotency-key")
        .and_then(|v| v.to_str().ok())
        .filter(|k| !k.is_empty())
        .map(|k| format!("{scope} {k}"));
    if let Some(k) = &key {
        if let Some((status, body, _)) = state.idempotent.lock().expect("idempotency cache").get(k).cloned() {
            return (StatusCode::from_u16(status).unwrap_or(StatusCode::OK), Json(body)).into_response();
        }
    }
    let (status, body) = match f().await {
        Ok(ok) => ok,
        Err(e) => {
            let status = StatusCode::from_u16(e.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, serde_json::to_value(&e).unwrap_or(Value::Null))
        }
    };
    // Retryable failures are not cached so the same key can retry them.
    let retryable = body.get("retryable").and_then(Value::as_bool).unwrap_or(false);
    if let Some(k) = key {
        if !retryable {
            state.idempotent.lock().expect("idempotency cache").insert(k, (status.as_u16(), body.clone(), (state.now)()));
        }
    }
    (status, Json(body)).into_response()
}

fn to_json<T: Serialize>(v: &T) -> Result<Value, ApiError> {
    serde_json::to_value(v).map_err(|e| ApiError::internal(e.to_string()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartBody {
    game: Option<GameKind>,
    seed: Option<u64>,
}

async fn start_session(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Response {
    let st = state.clone();
    idempotent(&state, &headers, "start".into(), || async move {
        let req: StartBody = parse_body(&body)?;
        let seed = req.seed.unwrap_or_else(rand::random);
        let games = req.game.map_or_else(|| GameKind::ALL.to_vec(), |g| vec![g]);
        let pairing = pair_randomly(&games, &st.models, &st.prompts, seed).map_err(|e| match e {
            PairingError::NoModels => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no_models", e.to_string(), false),
            other => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no_pairing", other.to_string(), false),
        })?;
        let (config, source) = match pairing.game {
            GameKind::Taboo => (GameConfig::taboo(st.taboo_words.clone()), SecretSource::Draw { seed }),
            g => (GameConfig::default_for(g), SecretSource::Withheld),
        };
        let id = SessionId(uuid::Uuid::new_v4().to_string());
        let now = (st.now)();
        let session = Session::new(id.clone(), config, &pairing, source, st.params.clone(), now)?;
        let mut live = Live { session, pending_retry: false, ended_by: None, last_activity: now };
        if live.session.game == GameKind::Akinator {
            live.session.apply_user_turn(AKINATOR_OPENING)?;
            if let Err(e) = st.model_turn(&mut live).await {
                if !e.retryable {
                    return Err(e);
                }
            }
        }
        let view = live.view(st.blind_play);
        st.sessions.lock().expect("session map").insert(id, Arc::new(tokio::sync::Mutex::new(live)));
        Ok((StatusCode::CREATED, to_json(&view)?))
    })
    .await
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<ApiSessionView>, ApiError> {
    if let Some(live) = state.live(&id) {
        return Ok(Json(live.lock().await.view(state.blind_play)));
    }
    let store = state.store.clone();
    let sid = SessionId(id.clone());
    let rec = tokio::task::spawn_blocking(move || store.get(&sid))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??
        .ok_or_else(|| ApiError::not_found(&id))?;
    let live = Live { session: rec.session, pending_retry: false, ended_by: None, last_activity: 0 };
    Ok(Json(live.view(state.blind_play)))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageBody {
    text: Option<String>,
}

async fn post_message(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let st = state.clone();
    idempotent(&state, &headers, format!("message {id}"), || async move {
        let req: MessageBody = parse_body(&body)?;
        let entry = st.live(&id).ok_or_else(|| match st.store.contains(&SessionId(id.clone())) {
            true => ApiError::from(GameError::SessionFinished),
            false => ApiError::not_found(&id),
        })?;
        let mut live = entry.lock().await;
        live.last_activity = (st.now)();
        let text = req.text.unwrap_or_default();
        let retry = live.session.awaiting == Awaiting::Model && text.trim().is_empty();
        if !retry && live.session.apply_user_turn(&text)? == UserTurnEffect::Forfeit {
            live.ended_by = Some("user_said_secret".into());
        }
        if live.session.awaiting == Awaiting::Model {
            st.model_turn(&mut live).await?;
        }
        st.persist_if_finished(&live).await?;
        Ok((StatusCode::OK, to_json(&live.view(st.blind_play))?))
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeBody {
    feedback: Feedback,
    revealed_secret: Option<String>,
}

impl Default for OutcomeBody {
    fn default() -> Self {
        OutcomeBody { feedback: Feedback::ConfirmedCorrect, revealed_secret: None }
    }
}

async fn post_outcome(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let st = state.clone();
    idempotent(&state, &headers, format!("outcome {id}"), || async move {
        if body.iter().all(u8::is_ascii_whitespace) {
            return Err(ApiError::bad_body("feedback is required"));
        }
        let req: OutcomeBody = parse_body(&body)?;
        let entry = st.live(&id).ok_or_else(|| ApiError::not_found(&id))?;
        let mut live = entry.lock().await;
        live.last_activity = (st.now)();
        let was_finished = live.session.is_finished();
        live.session.finalize(req.feedback, req.revealed_secret.as_deref())?;
        if !was_finished {
            st.persist_if_finished(&live).await?;
        }
        Ok((StatusCode::OK, to_json(&live.view(st.blind_play))?))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct LeaderboardQuery {
    game: Option<String>,
    family: Option<String>,
}

#[derive(Debug, Serialize)]
struct LeaderboardResponse {
    tables: Vec<LeaderboardTable>,
}

async fn get_leaderboard(
    State(state): State<Arc<AppState>>,
    Query(q): Query<LeaderboardQuery>,
) -> Result<Json<Value>, ApiError> {
    let game = match q.game.as_deref().filter(|s| !s.is_empty()) {
        Some(g) => Some(g.parse::<GameKind>().map_err(|_| ApiError::bad_body(format!("unknown game `{g}`")))?),
        None => None,
    };
    let family = match q.family.as_deref().filter(|s| !s.is_empty()) {
        Some(f) => Some(f.parse::<Family>().map_err(ApiError::bad_body)?),
        None => None,
    };
    let store = state.store.clone();
    let onto = state.ontology.clone();
    let tables = tokio::task::spawn_blocking(move || {
        let records = store.load(&CorpusFilter::default())?;
        let traces = store.load_traces()?;
        let mut classify = ontology_classifier(&onto);
        let bundle = compute(&records, &traces, Some(&mut classify), FirstCorrectRule::Strict)?;
        Ok::<_, ApiError>(leaderboard(&bundle, game, family)?)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(to_json(&LeaderboardResponse { tables })?))
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    let active = state.sessions.lock().expect("session map").len();
    Json(serde_json::json!({ "status": "ok", "models": state.models.len(), "sessions_in_memory": active }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/sessions", post(start_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/messages", post(post_message))
        .route("/v1/sessions/{id}/outcome", post(post_outcome))
        .route("/v1/leaderboard", get(get_leaderboard))
        .with_state(state)
}

/// Serves until ctrl-c, sweeping expired sessions once a minute.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    let sweeper = state.clone();
    let sweep = tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            let n = sweeper.sweep_expired().await;
            if n > 0 {
                tracing::info!(closed = n, "expired sessions abandoned");
            }
        }
    });
    let res = axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    sweep.abort();
    res
}
