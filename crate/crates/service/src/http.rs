use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::error::ServiceError;
use crate::session::SessionService;
use abductor_core::FindingStatus;

type Shared = State<Arc<SessionService>>;

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/v1/codex", get(codex))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/differential", get(differential))
        .route("/v1/sessions/{id}/findings", post(post_finding))
        .route("/v1/sessions/{id}/whatif", post(what_if))
        .route("/v1/sessions/{id}/explanations/{hypothesis}", get(explanation))
        .route("/v1/sessions/{id}/extract", post(extract))
        .with_state(service)
}

/// Binds `addr` and serves until the process is interrupted.
pub async fn serve(addr: SocketAddr, service: Arc<SessionService>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service)).await
}

fn body<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(bytes).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

#[derive(Deserialize)]
struct FindingBody {
    feature: String,
    status: String,
}

impl FindingBody {
    fn parse(bytes: &Bytes) -> Result<(String, FindingStatus), ServiceError> {
        let b: FindingBody = body(bytes)?;
        let status = b.status.parse().map_err(|_| ServiceError::BadStatus(b.status.clone()))?;
        Ok((b.feature, status))
    }
}

#[derive(Deserialize)]
struct TextBody {
    text: String,
}

#[derive(Deserialize)]
struct TopK {
    k: Option<String>,
}

impl TopK {
    fn parse(&self) -> Result<Option<usize>, ServiceError> {
        self.k
            .as_deref()
            .map(|k| {
                k.parse().map_err(|_| ServiceError::BadRequest(format!("k must be a positive integer, got `{k}`")))
            })
            .transpose()
    }
}

async fn codex(State(svc): Shared) -> impl IntoResponse {
    Json(svc.codex_info())
}

async fn create_session(State(svc): Shared) -> Result<impl IntoResponse, ServiceError> {
    let id = svc.create_session()?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

async fn differential(
    State(svc): Shared,
    Path(id): Path<String>,
    Query(q): Query<TopK>,
) -> Result<impl IntoResponse, ServiceError> {
    svc.observation(&id)?;
    Ok(Json(svc.differential(&id, q.parse()?)?))
}

async fn post_finding(
    State(svc): Shared,
    Path(id): Path<String>,
    bytes: Bytes,
) -> Result<impl IntoResponse, ServiceError> {
    svc.observation(&id)?;
    let (feature, status) = FindingBody::parse(&bytes)?;
    Ok(Json(svc.post_finding(&id, &feature, status)?))
}

async fn what_if(State(svc): Shared, Path(id): Path<String>, bytes: Bytes) -> Result<impl IntoResponse, ServiceError> {
    svc.observation(&id)?;
    let (feature, status) = FindingBody::parse(&bytes)?;
    Ok(Json(svc.what_if(&id, &feature, status)?))
}

async fn explanation(
    State(svc): Shared,
    Path((id, hypothesis)): Path<(String, String)>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(svc.explanation(&id, &hypothesis)?))
}

async fn extract(State(svc): Shared, Path(id): Path<String>, bytes: Bytes) -> Result<impl IntoResponse, ServiceError> {
    svc.observation(&id)?;
    let TextBody { text } = body(&bytes)?;
    // external extraction and embedding use blocking HTTP clients
    let proposals = tokio::task::spawn_blocking(move || svc.extract(&id, &text))
        .await
        .map_err(|e| ServiceError::Upstream(e.to_string()))??;
    Ok(Json(json!({ "proposals": proposals })))
}
