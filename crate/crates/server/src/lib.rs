//! HTTP/JSON front end for dialog sessions.
//!
//! Sessions live in memory. Each session sits behind its own mutex, so
//! requests to one session are serialized while different sessions proceed
//! in parallel; the registry of catalogs and specs is immutable.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use stager_core::grammar::DEFAULT_LIMIT;
use stager_core::registry::{Registry, RegistryError};
use stager_core::{Input, Session, SessionError};
use tower_http::services::ServeDir;

pub struct AppState {
    registry: Registry,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    grammar_limit: usize,
}

impl AppState {
    pub fn new(registry: Registry, grammar_limit: usize) -> AppState {
        AppState { registry, sessions: RwLock::new(HashMap::new()), grammar_limit }
    }

    pub fn with_defaults(registry: Registry) -> AppState {
        AppState::new(registry, DEFAULT_LIMIT)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UnknownSession", format!("no session `{id}`")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    detail: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, detail: impl Into<String>) -> ApiError {
        ApiError { status, code, detail: detail.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "detail": self.detail }))).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::SessionComplete | SessionError::ConfirmationPending | SessionError::StaleLink { .. } => {
                StatusCode::CONFLICT
            }
            SessionError::Staging(_) | SessionError::Vocabulary(_) => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::Session(inner) => inner.into(),
            RegistryError::UnknownDataset(_) | RegistryError::UnknownSpec(_) => {
                ApiError::new(StatusCode::NOT_FOUND, e.code(), e.to_string())
            }
            _ => ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Deserialize)]
struct CreateRequest {
    dataset: String,
    spec: String,
}

#[derive(Serialize)]
struct Created<'a> {
    session_id: &'a str,
    render_model: &'a stager_core::RenderModel,
}

fn new_session_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let session = app.registry.create_session_with_limit(&req.dataset, &req.spec, app.grammar_limit)?;
    let id = new_session_id();
    let body = serde_json::to_value(Created { session_id: &id, render_model: session.render_model() })
        .expect("render model serializes");
    app.sessions.write().expect("session table poisoned").insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(body)))
}

fn with_session<T>(app: &AppState, id: &str, f: impl FnOnce(&mut Session) -> ApiResult<T>) -> ApiResult<T> {
    let session = app.session(id)?;
    let mut guard = session.lock().expect("session poisoned");
    f(&mut guard)
}

async fn get_render_model(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    with_session(&app, &id, |s| Ok(Json(serde_json::to_value(s.render_model()).expect("serializes"))))
}

async fn handle_input(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<Input>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let session = app.session(&id)?;
    let Json(input) = body?;
    let mut s = session.lock().expect("session poisoned");
    let report = s.handle(input)?;
    Ok(Json(json!({ "report": report, "render_model": s.render_model() })))
}

async fn get_grammar(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    with_session(&app, &id, |s| Ok(Json(s.grammar())))
}

async fn get_help(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    with_session(&app, &id, |s| Ok(Json(s.help())))
}

async fn get_snapshot(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    with_session(&app, &id, |s| Ok(Json(serde_json::to_value(s.snapshot()).expect("serializes"))))
}

async fn delete_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    match app.sessions.write().expect("session table poisoned").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::new(StatusCode::NOT_FOUND, "UnknownSession", format!("no session `{id}`"))),
    }
}

async fn list_datasets(State(app): State<Arc<AppState>>) -> impl IntoResponse {
    Json(app.registry.pairs())
}

const PLACEHOLDER: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>Dialog sessions</title></head>
<body>
<h1>Dialog sessions</h1>
<p>No UI bundle is installed. Start the server with <code>--static-dir</code> to serve one.</p>
<p>API: <code>POST /sessions</code>, <code>GET /sessions/{id}</code>, <code>POST /sessions/{id}/input</code>,
<code>GET /sessions/{id}/grammar</code>, <code>GET /sessions/{id}/help</code>, <code>DELETE /sessions/{id}</code>,
<code>GET /datasets</code>.</p>
</body></html>
";

async fn placeholder() -> Html<&'static str> {
    Html(PLACEHOLDER)
}

pub fn router(app: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_render_model).delete(delete_session))
        .route("/sessions/{id}/input", post(handle_input))
        .route("/sessions/{id}/grammar", get(get_grammar))
        .route("/sessions/{id}/help", get(get_help))
        .route("/sessions/{id}/snapshot", get(get_snapshot))
        .route("/datasets", get(list_datasets))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder)),
    }
}
