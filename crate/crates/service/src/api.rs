//! HTTP routes over the session engine.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ontorepair_core::{parse_axiom, Verdict};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ServiceConfig;
use crate::session::{ConflictOrder, Session, SessionError, SessionSpec};
use crate::store::Store;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, kind, message: message.into() }
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no session {id}"))
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, kind) = match &e {
            SessionError::Parse { .. } => (StatusCode::BAD_REQUEST, "parse_error"),
            SessionError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            SessionError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            SessionError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            SessionError::ReplayDiverged { .. } | SessionError::Engine(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.kind, "message": self.message }))).into_response()
    }
}

type Shared = Arc<Mutex<Session>>;

struct Inner {
    sessions: RwLock<BTreeMap<String, Shared>>,
    store: Store,
    conflict_order: ConflictOrder,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(store: Store, conflict_order: ConflictOrder) -> Self {
        AppState(Arc::new(Inner { sessions: RwLock::new(BTreeMap::new()), store, conflict_order }))
    }

    /// Opens the configured data directory and replays every stored session.
    pub fn open(config: &ServiceConfig) -> Result<Self, String> {
        let store = Store::at(&config.data_dir).map_err(|e| format!("{}: {e}", config.data_dir.display()))?;
        let state = AppState::new(store, config.conflict_order);
        let logs = state.0.store.load_all().map_err(|e| e.to_string())?;
        let mut map = state.0.sessions.write().unwrap();
        for (id, events) in logs {
            let session = Session::replay(&events).map_err(|e| format!("session {id}: {e}"))?;
            map.insert(id, Arc::new(Mutex::new(session)));
        }
        drop(map);
        Ok(state)
    }

    fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.0.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::unknown_session(id))
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.0.sessions.read().unwrap().keys().cloned().collect()
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "parse_error", e.to_string()))
}

/// Runs `f` on the session off the async runtime and persists new events.
async fn mutate<T, F>(state: &AppState, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> Result<T, SessionError> + Send + 'static,
{
    let shared = state.session(id)?;
    let state = state.clone();
    tokio::task::spawn_blocking(move || {
        let mut s = shared.lock().unwrap();
        let before = s.events().len();
        let out = f(&mut s)?;
        state.0.store.append(s.id(), &s.events()[before..]).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(out)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

async fn read<T, F>(state: &AppState, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&Session) -> Result<T, SessionError> + Send + 'static,
{
    let shared = state.session(id)?;
    tokio::task::spawn_blocking(move || f(&shared.lock().unwrap()).map_err(ApiError::from))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

async fn create(State(state): State<AppState>, bytes: Bytes) -> Result<Response, ApiError> {
    let mut spec: SessionSpec = body(&bytes)?;
    spec.options.conflict_order.get_or_insert(state.0.conflict_order);
    let id = uuid::Uuid::new_v4().simple().to_string();
    let at = now();
    let session = {
        let id = id.clone();
        tokio::task::spawn_blocking(move || Session::create(&id, spec, &at))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))??
    };
    state.0.store.append(&id, session.events()).map_err(|e| ApiError::internal(e.to_string()))?;
    let view = session.view();
    state.0.sessions.write().unwrap().insert(id.clone(), Arc::new(Mutex::new(session)));
    let payload = json!({ "id": id, "phase": view.phase, "pending": view.pending });
    Ok((StatusCode::CREATED, Json(payload)).into_response())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let view = read(&state, &id, |s| Ok(s.view())).await?;
    Ok(Json(view).into_response())
}

async fn get_queries(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let view = read(&state, &id, |s| Ok(s.view())).await?;
    Ok(Json(json!({ "phase": view.phase, "pending": view.pending, "answered": view.answers.len() })).into_response())
}

#[derive(Debug, Deserialize, Serialize)]
struct AnswerRequest {
    axiom: String,
    verdict: Verdict,
    #[serde(default)]
    revise: bool,
}

async fn post_answer(State(state): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> Result<Response, ApiError> {
    state.session(&id)?;
    let req: AnswerRequest = body(&bytes)?;
    let axiom = parse_axiom(&req.axiom).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "parse_error", e.to_string()))?;
    let at = now();
    let outcome = mutate(&state, &id, move |s| s.answer(&axiom, req.verdict, req.revise, &at)).await?;
    Ok(Json(outcome).into_response())
}

async fn get_repairs(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let repairs = read(&state, &id, |s| Ok(s.repairs().to_vec())).await?;
    Ok(Json(json!({ "repairs": repairs })).into_response())
}

async fn get_analysis(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let report = read(&state, &id, |s| s.analysis()).await?;
    Ok(Json(report).into_response())
}

#[derive(Debug, Deserialize)]
struct ExecuteRequest {
    #[serde(rename = "repairId")]
    repair_id: String,
}

async fn post_execute(State(state): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> Result<Response, ApiError> {
    state.session(&id)?;
    let req: ExecuteRequest = body(&bytes)?;
    let at = now();
    let outcome = mutate(&state, &id, move |s| s.execute(&req.repair_id, &at)).await?;
    state.0.store.write_result(&id, &outcome.result).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(json!({ "id": outcome.id, "phase": "Done", "result": format!("/sessions/{id}/result") })).into_response())
}

async fn get_history(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let events = read(&state, &id, |s| Ok(s.events().to_vec())).await?;
    Ok(Json(json!({ "events": events })).into_response())
}

async fn get_result(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let text = read(&state, &id, |s| {
        s.result().map(str::to_string).ok_or_else(|| SessionError::Conflict("no repair has been executed".into()))
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/queries", get(get_queries))
        .route("/sessions/{id}/answers", post(post_answer))
        .route("/sessions/{id}/repairs", get(get_repairs))
        .route("/sessions/{id}/analysis", get(get_analysis))
        .route("/sessions/{id}/execute", post(post_execute))
        .route("/sessions/{id}/history", get(get_history))
        .route("/sessions/{id}/result", get(get_result))
        .with_state(state)
}
