//! JSON-over-HTTP endpoints for annotators and the annotation UI.
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | POST | `/workers` | `{"name"}` | worker |
//! | GET | `/tasks/next` | `?worker=ID&step=STEP` | task, or 204 |
//! | POST | `/tasks/{id}/responses` | `{"worker", "body"}` | acknowledgement |
//! | GET | `/progress` | | per-step counts |
//! | GET | `/expert` | | unresolved expert items |
//! | POST | `/expert/{id}` | `{"approve"}` | events |
//! | GET | `/export` | | dataset TSV |
//! | POST | `/batches` | `{"step", "sentences" or "sentence_ids"}` | task ids |

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::model::*;
use crate::{AnnotationService, ServiceError};

type Shared = Arc<AnnotationService>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownWorker(_) | ServiceError::UnknownTask(_) | ServiceError::UnknownExpertItem(_) => {
                StatusCode::NOT_FOUND
            }
            ServiceError::StaleLease { .. } | ServiceError::Duplicate { .. } | ServiceError::ExpertResolved(_) => {
                StatusCode::CONFLICT
            }
            ServiceError::BodyMismatch(_)
            | ServiceError::InvalidBody(_)
            | ServiceError::EmptyBatch
            | ServiceError::BadBatch(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Log(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.kind(), "message": self.to_string() }))).into_response()
    }
}

#[derive(Deserialize)]
struct RegisterRequest {
    name: String,
}

async fn register(State(svc): State<Shared>, Json(req): Json<RegisterRequest>) -> Result<Json<Worker>, ServiceError> {
    svc.register_worker(&req.name).map(Json)
}

#[derive(Deserialize)]
struct NextQuery {
    worker: WorkerId,
    step: Option<String>,
}

async fn next_task(State(svc): State<Shared>, Query(q): Query<NextQuery>) -> Result<Response, ServiceError> {
    let step = match q.step.as_deref().filter(|s| !s.is_empty()) {
        Some(s) => Some(s.parse::<Step>().map_err(ServiceError::InvalidBody)?),
        None => None,
    };
    Ok(match svc.next_task(q.worker, step)? {
        Some(task) => Json(task).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

#[derive(Deserialize)]
struct SubmitRequest {
    worker: WorkerId,
    body: ResponseBody,
}

async fn submit(
    State(svc): State<Shared>,
    Path(task_id): Path<TaskId>,
    Json(req): Json<SubmitRequest>,
) -> Result<Json<Acknowledgement>, ServiceError> {
    svc.submit(req.worker, task_id, req.body).map(Json)
}

async fn progress(State(svc): State<Shared>) -> Json<Progress> {
    Json(svc.progress())
}

async fn expert_queue(State(svc): State<Shared>) -> Json<Vec<ExpertItem>> {
    Json(svc.expert_queue())
}

#[derive(Deserialize)]
struct ResolveRequest {
    approve: bool,
}

async fn resolve(
    State(svc): State<Shared>,
    Path(item_id): Path<ExpertItemId>,
    Json(req): Json<ResolveRequest>,
) -> Result<Json<Vec<AggregationEvent>>, ServiceError> {
    svc.resolve_expert(item_id, req.approve).map(Json)
}

async fn export(State(svc): State<Shared>) -> Response {
    (
        [(header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8")],
        svc.export_tsv(),
    )
        .into_response()
}

#[derive(Deserialize)]
struct BatchRequest {
    step: String,
    #[serde(flatten)]
    input: BatchInput,
}

async fn batches(State(svc): State<Shared>, Json(req): Json<BatchRequest>) -> Result<Json<Vec<TaskId>>, ServiceError> {
    let step: Step = req.step.parse().map_err(ServiceError::BadBatch)?;
    svc.create_batch(step, req.input).map(Json)
}

/// Routes of the service; files under `static_dir`, when given, are served
/// for every other path.
pub fn router(service: Arc<AnnotationService>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/workers", post(register))
        .route("/tasks/next", get(next_task))
        .route("/tasks/{id}/responses", post(submit))
        .route("/progress", get(progress))
        .route("/expert", get(expert_queue))
        .route("/expert/{id}", post(resolve))
        .route("/export", get(export))
        .route("/batches", post(batches))
        .with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
