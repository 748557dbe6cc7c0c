//! JSON-over-HTTP interface.
//!
//! Requests for one session are serialized by a per-session async mutex, so
//! they queue rather than race; distinct sessions proceed concurrently.
//! Model refits run on the blocking pool while the session lock is held.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use seqplane_core::GridSpec;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tower_http::cors::{Any, CorsLayer};

use crate::enhance::EnhanceParams;
use crate::error::GalleryError;
use crate::images::{decode_upload, ImageStore};
use crate::session::{GallerySession, GridPayload, SessionSnapshot};

const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

type SessionHandle = Arc<Mutex<GallerySession>>;

#[derive(Default)]
pub struct AppState {
    pub images: ImageStore,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

impl AppState {
    fn session(&self, id: &str) -> Result<SessionHandle, ApiError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| GalleryError::NotFound(format!("session {id}")).into())
    }

    fn register(&self, session: GallerySession) {
        let id = session.id().to_string();
        self.sessions.write().expect("session table lock").insert(id, Arc::new(Mutex::new(session)));
    }
}

pub fn new_session_id() -> String {
    uuid::Uuid::new_v4().to_string()
}

#[derive(Debug)]
pub struct ApiError(GalleryError);

impl From<GalleryError> for ApiError {
    fn from(e: GalleryError) -> Self {
        Self(e)
    }
}

impl From<seqplane_core::Error> for ApiError {
    fn from(e: seqplane_core::Error) -> Self {
        Self(e.into())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self(GalleryError::Malformed(e.body_text()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            GalleryError::NotFound(_) => StatusCode::NOT_FOUND,
            GalleryError::RejectedChoice { .. } | GalleryError::InvalidState(_) => StatusCode::CONFLICT,
            GalleryError::Malformed(_) => StatusCode::UNPROCESSABLE_ENTITY,
            GalleryError::TooLarge(_) => StatusCode::PAYLOAD_TOO_LARGE,
            GalleryError::ModelUpdate(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = ErrorBody { code: self.0.code().into(), message: self.0.to_string() };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct ImageCreated {
    pub id: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSession {
    pub image_id: String,
    pub seed: Option<u64>,
    pub grid_res: Option<usize>,
    pub levels: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub grid: GridPayload,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChooseRequest {
    pub i: i32,
    pub j: i32,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChooseResponse {
    pub grid: GridPayload,
    pub iteration: usize,
    pub completed_plane: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SatisfiedResponse {
    pub count: usize,
    pub iteration: usize,
}

async fn upload_image(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<ImageCreated>)> {
    let pixels = tokio::task::spawn_blocking(move || decode_upload(&body)).await.expect("decoder task panicked")?;
    let image = state.images.insert(pixels);
    Ok((StatusCode::CREATED, Json(ImageCreated { id: image.id.clone(), width: image.width(), height: image.height() })))
}

async fn get_image(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let image = state.images.get(&id)?;
    let png = tokio::task::spawn_blocking(move || image.to_png()).await.expect("encoder task panicked");
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionCreated>)> {
    let Json(req) = body?;
    if !state.images.contains(&req.image_id) {
        return Err(GalleryError::NotFound(format!("image {}", req.image_id)).into());
    }
    let defaults = GridSpec::default();
    let grid = GridSpec::new(req.grid_res.unwrap_or(defaults.resolution), req.levels.unwrap_or(defaults.levels), 2.0)?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let session = GallerySession::new(new_session_id(), req.image_id, grid, seed)?;
    let created = SessionCreated { id: session.id().to_string(), grid: session.grid()? };
    state.register(session);
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_grid(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<GridPayload>> {
    let handle = state.session(&id)?;
    let session = handle.lock().await;
    Ok(Json(session.grid()?))
}

async fn choose(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<ChooseRequest>, JsonRejection>,
) -> ApiResult<Json<ChooseResponse>> {
    let Json(req) = body?;
    let handle = state.session(&id)?;
    let mut session = handle.lock_owned().await;
    let response = tokio::task::spawn_blocking(move || -> Result<ChooseResponse, GalleryError> {
        let outcome = session.choose(req.i, req.j)?;
        Ok(ChooseResponse { grid: session.grid()?, iteration: session.iteration(), completed_plane: outcome.completed_plane })
    })
    .await
    .expect("choice task panicked")?;
    Ok(Json(response))
}

async fn satisfied(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SatisfiedResponse>> {
    let handle = state.session(&id)?;
    let mut session = handle.lock().await;
    let count = session.satisfied();
    Ok(Json(SatisfiedResponse { count, iteration: session.iteration() }))
}

async fn best(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<EnhanceParams>> {
    let handle = state.session(&id)?;
    let session = handle.lock().await;
    Ok(Json(session.best()))
}

async fn snapshot(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionSnapshot>> {
    let handle = state.session(&id)?;
    let session = handle.lock().await;
    Ok(Json(session.snapshot()))
}

/// Restored sessions get a fresh id so one snapshot can be restored many times.
async fn restore(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<SessionCreated>)> {
    let text = std::str::from_utf8(&body).map_err(|e| GalleryError::Malformed(format!("snapshot is not UTF-8: {e}")))?;
    let mut session = GallerySession::from_json(text)?;
    session.set_id(new_session_id());
    let created = SessionCreated { id: session.id().to_string(), grid: session.grid()? };
    state.register(session);
    Ok((StatusCode::CREATED, Json(created)))
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any);
    Router::new()
        .route("/images", post(upload_image))
        .route("/images/{id}", get(get_image))
        .route("/sessions", post(create_session))
        .route("/sessions/restore", post(restore))
        .route("/sessions/{id}/grid", get(get_grid))
        .route("/sessions/{id}/choose", post(choose))
        .route("/sessions/{id}/satisfied", post(satisfied))
        .route("/sessions/{id}/best", get(best))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(cors)
        .with_state(state)
}
