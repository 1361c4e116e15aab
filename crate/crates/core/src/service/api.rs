//! HTTP API.
//!
//! | method | path               | body / query        | response          |
//! |--------|--------------------|---------------------|-------------------|
//! | GET    | `/api/events`      | `?since=<RFC 3339>` | [`EventsResponse`]|
//! | GET    | `/api/events/{id}` |                     | `EventDocument`   |
//! | POST   | `/api/score`       | `{title?, text}`    | [`ScoreResponse`] |
//! | GET    | `/api/health`      |                     | [`Health`]        |
//!
//! Errors are `{"error": message, "status": code}`.

use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::body::{to_bytes, Body};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tower_http::catch_panic::CatchPanicLayer;
use tower_http::services::ServeDir;

use super::pipeline::{load_run_file, PipelineRun};
use super::store::RunStore;
use crate::corpus::{load_event_document, load_manifest, parse_timestamp, EventDocument};
use crate::error::{Error, Result};
use crate::model::{FamilyContribution, Model};

/// Events of one published run, loaded into memory. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    pub run: Option<PipelineRun>,
    /// Newest first: by latest member publication time, then id.
    pub events: Vec<EventDocument>,
}

impl Snapshot {
    /// Reads the run `LATEST` points at. An empty store gives an empty
    /// snapshot.
    pub fn load(store: &RunStore) -> Result<Snapshot> {
        let Some(run_id) = store.latest()? else {
            return Ok(Snapshot::default());
        };
        let dir = store.run_dir(&run_id);
        let run = load_run_file(&dir)?;
        let manifest = load_manifest(&dir)?;
        if run.run_id != run_id || manifest.batch_id != run_id {
            return Err(Error::InvalidInput(format!(
                "run directory {} is inconsistent",
                dir.display()
            )));
        }
        let mut events = manifest
            .events
            .iter()
            .map(|e| load_event_document(&dir.join(&e.file)))
            .collect::<Result<Vec<_>>>()?;
        if events.iter().any(|e| e.batch_id != run_id) || events.len() != run.counts.events {
            return Err(Error::InvalidInput(format!(
                "run directory {} is inconsistent",
                dir.display()
            )));
        }
        events.sort_by(|a, b| {
            latest_published(b)
                .cmp(&latest_published(a))
                .then_with(|| a.id.cmp(&b.id))
        });
        Ok(Snapshot { run: Some(run), events })
    }

    pub fn run_id(&self) -> Option<&str> {
        self.run.as_ref().map(|r| r.run_id.as_str())
    }
}

fn latest_published(event: &EventDocument) -> Option<DateTime<Utc>> {
    event.articles.iter().map(|a| a.published_at).max()
}

/// The currently published snapshot. Readers clone the `Arc`, so a swap
/// never changes what an in-flight request sees.
#[derive(Debug, Default)]
pub struct SnapshotCell(RwLock<Arc<Snapshot>>);

impl SnapshotCell {
    pub fn new(snapshot: Snapshot) -> Self {
        SnapshotCell(RwLock::new(Arc::new(snapshot)))
    }

    pub fn current(&self) -> Arc<Snapshot> {
        self.0.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn publish(&self, snapshot: Snapshot) {
        *self.0.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(snapshot);
    }

    /// Reloads from `store` when its latest run differs from the published
    /// one. Returns whether a new snapshot was published.
    pub fn refresh(&self, store: &RunStore) -> Result<bool> {
        let current = self.current();
        let latest = store.latest()?;
        if let (Some(id), Some(run)) = (&latest, &current.run) {
            if *id == run.run_id && load_run_file(&store.run_dir(id)).ok().as_ref() == Some(run) {
                return Ok(false);
            }
        } else if latest.is_none() && current.run.is_none() {
            return Ok(false);
        }
        let snapshot = Snapshot::load(store)?;
        self.publish(snapshot);
        Ok(true)
    }
}

pub struct AppState {
    pub snapshots: SnapshotCell,
    pub model: Arc<Model>,
    pub model_fingerprint: String,
    pub max_text_bytes: usize,
}

impl AppState {
    pub fn new(model: Arc<Model>, snapshot: Snapshot, max_text_bytes: usize) -> Self {
        AppState {
            snapshots: SnapshotCell::new(snapshot),
            model_fingerprint: model.fingerprint(),
            model,
            max_text_bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub status: u16,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.message,
            status: self.status.as_u16(),
        };
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Serialize)]
pub struct EventsResponse<'a> {
    pub run_id: Option<&'a str>,
    pub window_start: Option<DateTime<Utc>>,
    pub window_end: Option<DateTime<Utc>>,
    pub events: Vec<&'a EventDocument>,
}

#[derive(Debug, Deserialize)]
pub struct EventsQuery {
    since: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    #[serde(default)]
    pub title: Option<String>,
    pub text: String,
}

#[derive(Debug, Serialize)]
pub struct ScoreResponse {
    pub propaganda_index: f64,
    pub bin: u8,
    pub logit: f64,
    pub bias: f64,
    pub family_contributions: Vec<FamilyContribution>,
    pub model_fingerprint: String,
}

#[derive(Debug, Serialize)]
pub struct Health<'a> {
    pub status: &'static str,
    pub run_id: Option<&'a str>,
    pub event_count: usize,
    pub model_fingerprint: String,
    pub model_features: String,
}

/// Builds the router. When `static_dir` is given, other paths are served
/// from it.
pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/events", get(list_events))
        .route("/events/{id}", get(get_event))
        .route("/score", post(score))
        .route("/health", get(health))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "no such endpoint") })
        .with_state(state);
    let app = Router::new().nest("/api", api);
    let app = match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    };
    app.layer(CatchPanicLayer::custom(|_| {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal error").into_response()
    }))
}

async fn list_events(
    State(state): State<Arc<AppState>>,
    Query(query): Query<EventsQuery>,
) -> std::result::Result<Response, ApiError> {
    let since = match query.since.as_deref() {
        Some(raw) => Some(
            parse_timestamp(raw)
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("bad since parameter: {e}")))?,
        ),
        None => None,
    };
    let snapshot = state.snapshots.current();
    let events = snapshot
        .events
        .iter()
        .filter(|e| since.is_none_or(|t| latest_published(e).is_some_and(|p| p >= t)))
        .collect();
    let body = EventsResponse {
        run_id: snapshot.run_id(),
        window_start: snapshot.run.as_ref().map(|r| r.window_start),
        window_end: snapshot.run.as_ref().map(|r| r.window_end),
        events,
    };
    Ok(Json(body).into_response())
}

async fn get_event(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> std::result::Result<Response, ApiError> {
    let snapshot = state.snapshots.current();
    match snapshot.events.iter().find(|e| e.id == id) {
        Some(event) => Ok(Json(event).into_response()),
        None => Err(ApiError::new(StatusCode::NOT_FOUND, format!("unknown event {id}"))),
    }
}

async fn score(State(state): State<Arc<AppState>>, body: Body) -> std::result::Result<Response, ApiError> {
    let too_large = || {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            format!("text exceeds {} bytes", state.max_text_bytes),
        )
    };
    // JSON escapes can take up to six bytes per text byte.
    let body_limit = state.max_text_bytes.saturating_mul(6).saturating_add(64 * 1024);
    let bytes = to_bytes(body, body_limit).await.map_err(|_| too_large())?;
    let request: ScoreRequest = serde_json::from_slice(&bytes)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))?;
    if request.text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "text must not be empty"));
    }
    if request.text.len() > state.max_text_bytes {
        return Err(too_large());
    }
    let model = state.model.clone();
    let score = tokio::task::spawn_blocking(move || model.score_article(request.title.as_deref(), &request.text))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(ScoreResponse {
        propaganda_index: score.propaganda_index,
        bin: score.bin,
        logit: score.logit,
        bias: score.bias,
        family_contributions: score.family_contributions,
        model_fingerprint: state.model_fingerprint.clone(),
    })
    .into_response())
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let snapshot = state.snapshots.current();
    Json(Health {
        status: "ok",
        run_id: snapshot.run_id(),
        event_count: snapshot.events.len(),
        model_fingerprint: state.model_fingerprint.clone(),
        model_features: state.model.pipeline.flags().to_string(),
    })
    .into_response()
}
