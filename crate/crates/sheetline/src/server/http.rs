use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::ws::WebSocketUpgrade;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use super::store::StoreError;
use super::AppState;

#[derive(Debug, Deserialize)]
pub struct Params {
    participant: Option<String>,
    spec_digest: Option<String>,
    token: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct PreloadEntry {
    pub asset_id: String,
    pub src: String,
    pub media_type: String,
}

fn error(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": code, "message": message.into() }))).into_response()
}

fn missing(name: &str) -> Response {
    error(StatusCode::BAD_REQUEST, "MISSING_PARAMETER", format!("`{name}` is required"))
}

fn forbidden() -> Response {
    error(StatusCode::FORBIDDEN, "BAD_TOKEN", "token does not match")
}

/// Participant capability check; participants without a token are open.
fn participant_gate<'a>(state: &'a AppState, p: &Params) -> Result<(&'a str, &'a super::Enrollment), Response> {
    let id = p.participant.as_deref().ok_or_else(|| missing("participant"))?;
    let (id, enrollment) = state.plan().participants.get_key_value(id).ok_or_else(|| {
        error(StatusCode::NOT_FOUND, "UNKNOWN_PARTICIPANT", format!("`{id}` is not in the plan"))
    })?;
    match &enrollment.token {
        Some(t) if p.token.as_deref() != Some(t.as_str()) => Err(forbidden()),
        _ => Ok((id.as_str(), enrollment)),
    }
}

fn researcher_gate(state: &AppState, p: &Params) -> Result<(), Response> {
    match &state.config().researcher_token {
        Some(t) if p.token.as_deref() != Some(t.as_str()) => Err(forbidden()),
        _ => Ok(()),
    }
}

/// Asset URL as the client should fetch it.
fn asset_url(src: &str) -> String {
    if src.contains("://") || src.starts_with('/') {
        src.to_string()
    } else {
        format!("/assets/{src}")
    }
}

async fn questionnaire(State(state): State<AppState>, Query(p): Query<Params>) -> Response {
    let (id, enrollment) = match participant_gate(&state, &p) {
        Ok(x) => x,
        Err(r) => return r,
    };
    let index = state.with_store(|s| s.next_index(id));
    let total = enrollment.specs.len();
    let Some(doc) = enrollment.specs.get(index) else {
        return (
            StatusCode::CONFLICT,
            Json(json!({ "status": "study_complete", "participant_id": id, "completed": total, "total": total })),
        )
            .into_response();
    };
    let preload: Vec<PreloadEntry> = doc
        .spec
        .assets
        .iter()
        .filter(|a| a.preload)
        .map(|a| PreloadEntry {
            asset_id: a.asset_id.clone(),
            src: asset_url(&a.src),
            media_type: a.media_type.clone(),
        })
        .collect();
    Json(json!({
        "status": "ready",
        "participant_id": id,
        "index": index,
        "total": total,
        "spec_digest": doc.digest,
        "spec_document": doc.document,
        "spec": doc.spec,
        "preload": preload,
    }))
    .into_response()
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn store_error(e: &StoreError) -> Response {
    let status = match e {
        StoreError::UnknownParticipant(_) => StatusCode::NOT_FOUND,
        StoreError::UnknownSpec(_) | StoreError::Export(_) => StatusCode::BAD_REQUEST,
        StoreError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    error(status, e.code(), e.to_string())
}

async fn upload(State(state): State<AppState>, Query(p): Query<Params>, body: Bytes) -> Response {
    let id = match participant_gate(&state, &p) {
        Ok((id, _)) => id.to_string(),
        Err(r) => return r,
    };
    let Some(spec) = p.spec_digest else {
        return missing("spec_digest");
    };
    let s = state.clone();
    let result = tokio::task::spawn_blocking(move || {
        s.with_store(|store| store.accept(s.plan(), &id, &spec, &body, now_ms()))
    })
    .await;
    match result {
        Ok(Ok(receipt)) => Json(receipt).into_response(),
        Ok(Err(e)) => {
            tracing::warn!(code = e.code(), "upload rejected: {e}");
            store_error(&e)
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "STORAGE_FAILURE", e.to_string()),
    }
}

async fn receipts(State(state): State<AppState>, Query(p): Query<Params>) -> Response {
    if let Err(r) = researcher_gate(&state, &p) {
        return r;
    }
    let list: Vec<_> = state.with_store(|s| {
        s.receipts()
            .iter()
            .filter(|r| p.participant.as_deref().is_none_or(|id| r.participant_id == id))
            .cloned()
            .collect()
    });
    Json(list).into_response()
}

async fn export_csv(State(state): State<AppState>, Query(p): Query<Params>) -> Response {
    if let Err(r) = researcher_gate(&state, &p) {
        return r;
    }
    let s = state.clone();
    let result = tokio::task::spawn_blocking(move || s.with_store(|store| store.aggregate(p.spec_digest.as_deref()))).await;
    match result {
        Ok(Ok(table)) => ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], table.to_csv()).into_response(),
        Ok(Err(StoreError::Export(e))) => error(StatusCode::CONFLICT, e.code(), e.to_string()),
        Ok(Err(e)) => store_error(&e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "STORAGE_FAILURE", e.to_string()),
    }
}

async fn sync(State(state): State<AppState>, Path(group): Path<String>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| async move { state.hub().connect(group, socket).await })
}

pub fn router(state: AppState) -> Router {
    let limit = state.config().max_payload_bytes;
    let mut app = Router::new()
        .route("/questionnaire", get(questionnaire))
        .route("/results", get(receipts).post(upload).layer(DefaultBodyLimit::max(limit)))
        .route("/export.csv", get(export_csv))
        .route("/sync/{group}", get(sync));
    if let Some(dir) = &state.config().ui_dir {
        app = app.nest_service("/app", ServeDir::new(dir));
    }
    if let Some(dir) = &state.config().assets_dir {
        app = app.nest_service("/assets", ServeDir::new(dir));
    }
    app.with_state(state)
}
