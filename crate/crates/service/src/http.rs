//! HTTP front end.

use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::{Scheduler, ServiceError, TickReport};

pub struct AppState {
    pub scheduler: Mutex<Scheduler>,
    /// Serializes ticks; the scheduler lock is released while solving.
    pub tick_lock: tokio::sync::Mutex<()>,
    pub token: String,
}

impl AppState {
    pub fn new(scheduler: Scheduler, token: impl Into<String>) -> Arc<Self> {
        Arc::new(AppState {
            scheduler: Mutex::new(scheduler),
            tick_lock: tokio::sync::Mutex::new(()),
            token: token.into(),
        })
    }
}

pub fn unix_now() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/requests", post(submit))
        .route("/requests/{id}", get(status))
        .route("/clinics/{id}/availability", get(availability))
        .route("/admin/tick", post(tick))
        .route("/health", get(health))
        .with_state(state)
}

struct ApiError(StatusCode, String, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({"error": self.1, "message": self.2}))).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let code = match e {
            ServiceError::Schema(_) | ServiceError::Invalid { .. } => StatusCode::BAD_REQUEST,
            ServiceError::UnknownRequest(_) | ServiceError::UnknownClinic(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(code, e.code().to_owned(), e.to_string())
    }
}

fn authorize(state: &AppState, headers: &HeaderMap) -> Result<(), ApiError> {
    let ok = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .is_some_and(|t| t == state.token);
    if ok {
        Ok(())
    } else {
        Err(ApiError(
            StatusCode::UNAUTHORIZED,
            "unauthorized".into(),
            "missing or invalid bearer token".into(),
        ))
    }
}

async fn submit(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    authorize(&state, &headers)?;
    let text = std::str::from_utf8(&body).map_err(|_| {
        ApiError(
            StatusCode::BAD_REQUEST,
            "schema-violation".into(),
            "body is not UTF-8".into(),
        )
    })?;
    let key = headers.get("idempotency-key").and_then(|v| v.to_str().ok());
    let (id, created) = state.scheduler.lock().unwrap().submit_json(text, key, unix_now())?;
    let code = if created { StatusCode::ACCEPTED } else { StatusCode::OK };
    Ok((code, Json(json!({"request_id": id}))).into_response())
}

async fn status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = state.scheduler.lock().unwrap();
    Ok(Json(s.status(&id)?).into_response())
}

async fn availability(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = state.scheduler.lock().unwrap();
    Ok(Json(s.availability(&id)?).into_response())
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TickBody {
    now: Option<i64>,
}

/// One serialized tick: snapshot under the lock, solve outside it, commit under it.
pub async fn run_tick(state: &Arc<AppState>, now: i64) -> Result<TickReport, ServiceError> {
    let _serial = state.tick_lock.lock().await;
    let plan = state.scheduler.lock().unwrap().begin_tick(now);
    let Some(plan) = plan else {
        return Ok(TickReport {
            now,
            batch_size: 0,
            scheduled: Vec::new(),
            rejected: Vec::new(),
        });
    };
    let outcome = tokio::task::spawn_blocking(move || plan.solve())
        .await
        .expect("solver task panicked");
    let report = state.scheduler.lock().unwrap().commit(outcome);
    report
}

async fn tick(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    authorize(&state, &headers)?;
    let req: TickBody = if body.is_empty() {
        TickBody::default()
    } else {
        medsched_core::json::from_json_str(std::str::from_utf8(&body).unwrap_or(""))
            .map_err(|e| ApiError::from(ServiceError::Schema(e)))?
    };
    let report = run_tick(&state, req.now.unwrap_or_else(unix_now)).await?;
    Ok(Json(report).into_response())
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}
