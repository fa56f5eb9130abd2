//! `/api/*` handlers.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use tagpag_core::archive::ArchiveLookup;
use tagpag_core::config::{AnnotationMode, LabelDef, Task, RESERVED_KEYS, RESERVED_SHORTCUTS};
use tagpag_core::extraction::ExtractionResult;
use tagpag_core::store::{is_valid_annotator_id, Annotation, AnnotationDraft, ExportScope};
use tagpag_core::url_analysis::{analyze_url, UrlAnalysis};

use crate::{ApiError, AppState};

/// Served with stored pages so they render without scripts or external loads.
pub const HTML_CSP: &str = "default-src 'none'; style-src 'unsafe-inline'; sandbox";

type Params = Result<Query<HashMap<String, String>>, QueryRejection>;

fn params(q: Params) -> Result<HashMap<String, String>, ApiError> {
    q.map(|Query(m)| m)
        .map_err(|e| ApiError::bad_request("invalid_query", e.body_text()))
}

fn annotator(q: &HashMap<String, String>) -> Result<String, ApiError> {
    match q.get("annotator") {
        Some(id) if is_valid_annotator_id(id) => Ok(id.clone()),
        Some(id) => Err(ApiError::bad_request(
            "invalid_annotator_id",
            format!("invalid annotator id {id:?}: use letters, digits, `_` or `-`"),
        )),
        None => Err(ApiError::bad_request(
            "invalid_annotator_id",
            "missing `annotator` query parameter",
        )),
    }
}

fn task_index(state: &AppState, task_id: &str) -> Result<usize, ApiError> {
    state
        .corpus()
        .index_of(task_id)
        .ok_or_else(|| ApiError::unknown_task(task_id))
}

#[derive(Debug, Serialize)]
pub struct ConfigPayload<'a> {
    pub mode: AnnotationMode,
    pub labels: &'a [LabelDef],
    pub reserved_shortcuts: Vec<String>,
}

pub async fn config(State(state): State<Arc<AppState>>) -> Response {
    let reserved = RESERVED_SHORTCUTS
        .iter()
        .map(char::to_string)
        .chain(RESERVED_KEYS.iter().map(|k| k.to_string()))
        .collect();
    let labels = state.labels();
    Json(ConfigPayload {
        mode: labels.mode,
        labels: &labels.labels,
        reserved_shortcuts: reserved,
    })
    .into_response()
}

#[derive(Debug, Serialize)]
pub struct Counts {
    pub annotated: usize,
    pub total: usize,
}

#[derive(Debug, Serialize)]
pub struct SessionPayload {
    pub annotator_id: String,
    pub mode: AnnotationMode,
    pub randomized: bool,
    pub order: Vec<String>,
    pub counts: Counts,
    /// Absent once every task is annotated.
    pub first_unannotated: Option<usize>,
}

pub async fn session(
    State(state): State<Arc<AppState>>,
    q: Params,
) -> Result<Json<SessionPayload>, ApiError> {
    let who = annotator(&params(q)?)?;
    let order = state.order_for(&who);
    let done = state.store.annotated_indices(&who);
    let tasks = state.corpus().tasks();
    let first_unannotated = if order.is_empty() {
        None
    } else {
        order
            .next_unannotated(|t| done.contains(&t), 0)
            .ok()
            .flatten()
    };
    Ok(Json(SessionPayload {
        order: order
            .permutation
            .iter()
            .map(|&i| tasks[i].task_id.clone())
            .collect(),
        counts: Counts {
            annotated: done.len(),
            total: tasks.len(),
        },
        first_unannotated,
        mode: state.labels().mode,
        randomized: order.randomized,
        annotator_id: who,
    }))
}

#[derive(Debug, Serialize)]
pub struct TaskPayload<'a> {
    pub task: &'a Task,
    pub extraction: &'a ExtractionResult,
    pub html_missing: bool,
    pub url_analysis: UrlAnalysis,
    pub own_annotation: Option<Annotation>,
    pub position: usize,
    pub total: usize,
}

pub async fn task(
    State(state): State<Arc<AppState>>,
    Path(task_id): Path<String>,
    q: Params,
) -> Result<Response, ApiError> {
    let q = params(q)?;
    let index = task_index(&state, &task_id)?;
    let who = annotator(&q)?;
    let extraction = state.extraction(index).await;
    let task = &state.corpus().tasks()[index];
    let position = state
        .order_for(&who)
        .position_of(index)
        .expect("order covers the corpus");
    Ok(Json(TaskPayload {
        task,
        extraction: &extraction.result,
        html_missing: extraction.html_missing,
        url_analysis: analyze_url(&task.url, &state.labels().labels),
        own_annotation: state.store.get(&task_id, &who),
        position,
        total: state.corpus().len(),
    })
    .into_response())
}

#[derive(Debug, Serialize)]
pub struct CommitPayload {
    pub annotation: Annotation,
    /// Where the client should go next; absent when nothing is left.
    pub next_position: Option<usize>,
}

pub async fn annotate(
    State(state): State<Arc<AppState>>,
    Path(task_id): Path<String>,
    q: Params,
    body: Result<Json<AnnotationDraft>, JsonRejection>,
) -> Result<Json<CommitPayload>, ApiError> {
    let q = params(q)?;
    let index = task_index(&state, &task_id)?;
    let who = annotator(&q)?;
    let Json(draft) = body.map_err(|e| ApiError::bad_request("invalid_body", e.body_text()))?;

    let store = state.store.clone();
    let (tid, id) = (task_id.clone(), who.clone());
    // The store's writer fsyncs, so keep it off the async workers.
    let annotation = tokio::task::spawn_blocking(move || store.upsert(&tid, &id, draft))
        .await
        .map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
        })??;

    let order = state.order_for(&who);
    let done = state.store.annotated_indices(&who);
    let current = order.position_of(index).expect("order covers the corpus");
    let next_position = order
        .advance(current, state.labels().mode, |t| done.contains(&t))
        .expect("position in range");
    Ok(Json(CommitPayload {
        annotation,
        next_position,
    }))
}

pub async fn task_html(
    State(state): State<Arc<AppState>>,
    Path(task_id): Path<String>,
) -> Result<Response, ApiError> {
    let index = task_index(&state, &task_id)?;
    let task = &state.corpus().tasks()[index];
    let Some(rel) = &task.html_path else {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "html_missing",
            "task has no stored HTML",
        ));
    };
    let bytes = tokio::fs::read(state.html_dir.join(rel))
        .await
        .map_err(|_| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "html_missing",
                "stored HTML is missing",
            )
        })?;
    let mut resp = bytes.into_response();
    let headers = resp.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("text/html"));
    headers.insert(
        header::CONTENT_SECURITY_POLICY,
        HeaderValue::from_static(HTML_CSP),
    );
    headers.insert(
        header::X_CONTENT_TYPE_OPTIONS,
        HeaderValue::from_static("nosniff"),
    );
    headers.insert(
        header::REFERRER_POLICY,
        HeaderValue::from_static("no-referrer"),
    );
    Ok(resp)
}

pub async fn wayback(
    State(state): State<Arc<AppState>>,
    q: Params,
) -> Result<Json<ArchiveLookup>, ApiError> {
    let q = params(q)?;
    let task_id = q.get("task_id").ok_or_else(|| {
        ApiError::bad_request("invalid_query", "missing `task_id` query parameter")
    })?;
    let index = task_index(&state, task_id)?;
    let url = &state.corpus().tasks()[index].url;
    Ok(Json(state.wayback.lookup(url).await))
}

pub async fn export(State(state): State<Arc<AppState>>, q: Params) -> Result<Response, ApiError> {
    let q = params(q)?;
    let raw = q
        .get("scope")
        .ok_or_else(|| ApiError::bad_request("invalid_scope", "missing `scope` query parameter"))?;
    let scope = ExportScope::parse(raw).ok_or_else(|| {
        ApiError::bad_request("invalid_scope", format!("invalid export scope {raw:?}"))
    })?;
    let body = state.store.export_csv(&scope);
    let disposition = format!("attachment; filename=\"annotations-{raw}.csv\"");
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()),
            (header::CONTENT_DISPOSITION, disposition),
        ],
        body,
    )
        .into_response())
}

pub async fn not_found() -> ApiError {
    ApiError::not_found("no such API endpoint")
}
