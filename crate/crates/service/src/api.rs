use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use attrib_core::attribution::{attribute, Method};
use attrib_core::chat::{dialogue_messages, ChatBackend};
use attrib_core::explanation::explain;
use attrib_core::scoring::{CacheTelemetry, CachedScorer, Scorer};
use attrib_core::{Error as CoreError, TargetResponse};
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::Mutex;

use crate::store::{Record, Session, SessionStore};
use crate::ServiceError;

type SharedScorer = CachedScorer<Arc<dyn Scorer>>;

/// Shared state behind the router.
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    store: SessionStore,
    scorer: Arc<SharedScorer>,
    chat: Arc<dyn ChatBackend>,
    explainer: Option<Arc<dyn ChatBackend>>,
}

impl AppState {
    /// Opens the session store and wires the backends. `explainer` is the
    /// chat backend used for explanations; `None` selects the template.
    pub fn new(
        store_path: impl AsRef<std::path::Path>,
        scorer: SharedScorer,
        chat: Arc<dyn ChatBackend>,
        explainer: Option<Arc<dyn ChatBackend>>,
    ) -> Result<Arc<Self>, ServiceError> {
        let (store, sessions) = SessionStore::open(store_path)?;
        tracing::info!(path = %store.path().display(), sessions = sessions.len(), "session store opened");
        let sessions = sessions.into_iter().map(|s| (s.id.clone(), Arc::new(Mutex::new(s)))).collect();
        Ok(Arc::new(AppState { sessions: RwLock::new(sessions), store, scorer: Arc::new(scorer), chat, explainer }))
    }

    pub fn scorer_telemetry(&self) -> CacheTelemetry {
        self.scorer.telemetry()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown session {id}")))
    }

    fn persist(&self, session: &mut Session, record: Record) -> Result<(), ApiError> {
        self.store.append(&record).map_err(|e| {
            tracing::error!(error = %e, "session store append failed");
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        })?;
        session.commit(record);
        Ok(())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/attribute", post(attribute_session))
        .route("/sessions/{id}/explain", post(explain_session))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let status = match &e {
            CoreError::Backend { .. } | CoreError::Protocol(_) => StatusCode::BAD_GATEWAY,
            CoreError::NoEvidence => StatusCode::CONFLICT,
            CoreError::InvalidArgument(_)
            | CoreError::InvalidContinuation
            | CoreError::TurnOutOfRange { .. }
            | CoreError::SentenceNotFound(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<tokio::task::JoinError> for ApiError {
    fn from(e: tokio::task::JoinError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

/// Parses a JSON body; an empty body reads as `T::default()` when allowed.
fn parse_body<T: DeserializeOwned>(body: &Bytes, empty: Option<T>) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        if let Some(value) = empty {
            return Ok(value);
        }
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

async fn create_session(State(state): State<Arc<AppState>>) -> Result<impl IntoResponse, ApiError> {
    let id = uuid::Uuid::new_v4().simple().to_string();
    let at = Utc::now();
    let mut session = Session::new(id.clone(), at);
    state.persist(&mut session, Record::Create { id: id.clone(), at })?;
    state.sessions.write().unwrap_or_else(|p| p.into_inner()).insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    let session = state.session(&id)?;
    let session = session.lock().await;
    Ok(Json(session.clone()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageBody {
    text: String,
}

async fn post_message(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let MessageBody { text } = parse_body(&body, None)?;
    if text.trim().is_empty() {
        return Err(ApiError::bad_request("message text is empty"));
    }
    let session = state.session(&id)?;
    let mut session = session.lock().await;

    let messages = dialogue_messages(&session.dialogue, &text);
    let chat = Arc::clone(&state.chat);
    let reply = tokio::task::spawn_blocking(move || chat.complete(&messages))
        .await?
        .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, e.to_string()))?;

    let record = Record::Turn { id, teacher: text, assistant: reply.clone(), at: Utc::now() };
    state.persist(&mut session, record)?;
    Ok(Json(json!({ "reply": reply })))
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeBody {
    target: Option<String>,
    method: Option<String>,
}

async fn attribute_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let request: AttributeBody = parse_body(&body, Some(AttributeBody::default()))?;
    let method = match request.method.as_deref() {
        Some(m) => m.parse::<Method>()?,
        None => Method::Hierarchical,
    };
    let session = state.session(&id)?;
    let mut session = session.lock().await;
    if session.dialogue.is_empty() {
        return Err(ApiError::conflict("session has no turns to attribute"));
    }

    let target = match request.target {
        Some(text) => TargetResponse::new(text)?,
        None => {
            let reply = session
                .dialogue
                .turns()
                .iter()
                .rev()
                .find(|t| !t.assistant_text.trim().is_empty())
                .ok_or_else(|| ApiError::conflict("no assistant reply to attribute"))?;
            TargetResponse::new(reply.assistant_text.clone())?
        }
    };

    // A target that is one of the assistant's replies is attributed against
    // the dialogue as it stood when that reply was produced.
    let dialogue =
        match session.dialogue.turns().iter().rposition(|t| t.assistant_text.trim() == target.as_str().trim()) {
            Some(position) => session.dialogue.truncated(position + 1, true),
            None => session.dialogue.clone(),
        };
    let scorer = Arc::clone(&state.scorer);
    let worker_target = target.clone();
    let result = tokio::task::spawn_blocking(move || attribute(&dialogue, &worker_target, &*scorer, method)).await??;

    let record = Record::Attribution { id, result: result.clone(), at: Utc::now() };
    state.persist(&mut session, record)?;
    Ok(Json(result))
}

async fn explain_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    let session = state.session(&id)?;
    let mut session = session.lock().await;
    let attribution =
        session.last_attribution.clone().ok_or_else(|| ApiError::conflict("no attribution to explain yet"))?;

    let explainer = state.explainer.clone();
    let explanation =
        tokio::task::spawn_blocking(move || explain(&attribution.target, &attribution.evidence, explainer.as_deref()))
            .await?;

    let record = Record::Explanation { id, explanation: explanation.clone(), at: Utc::now() };
    state.persist(&mut session, record)?;
    Ok(Json(explanation))
}
