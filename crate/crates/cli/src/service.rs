//! HTTP front end over [`Scorer`].

use std::sync::Arc;
use std::time::Duration;

use astar_deduce::scoring::{to_body, ScoreError, Scorer, SCHEMA_VERSION};
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde_json::json;

pub const DEFAULT_BODY_LIMIT: usize = 1 << 20;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Clone)]
pub struct ServiceConfig {
    pub body_limit: usize,
    pub timeout: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            body_limit: DEFAULT_BODY_LIMIT,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Clone)]
struct AppState {
    scorer: Arc<Scorer>,
    timeout: Duration,
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(status: StatusCode, kind: &str, message: String) -> Response {
    let body = to_body(&json!({
        "schema": SCHEMA_VERSION,
        "error": {"kind": kind, "message": message},
    }));
    json_response(status, body)
}

fn score_error(e: ScoreError) -> Response {
    match e {
        ScoreError::BadRequest(m) => error_response(StatusCode::BAD_REQUEST, "bad-request", m),
        ScoreError::UnknownProgram(id) => {
            error_response(StatusCode::NOT_FOUND, "unknown-program", format!("no program with id {id:?}"))
        }
        ScoreError::Unprocessable(m) => error_response(StatusCode::UNPROCESSABLE_ENTITY, "unprocessable", m),
    }
}

async fn run_blocking<F>(state: &AppState, f: F) -> Response
where
    F: FnOnce(&Scorer) -> Result<String, ScoreError> + Send + 'static,
{
    let scorer = Arc::clone(&state.scorer);
    let task = tokio::task::spawn_blocking(move || f(&scorer));
    match tokio::time::timeout(state.timeout, task).await {
        Ok(Ok(Ok(body))) => json_response(StatusCode::OK, body),
        Ok(Ok(Err(e))) => score_error(e),
        Ok(Err(join)) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal", join.to_string()),
        Err(_) => error_response(
            StatusCode::SERVICE_UNAVAILABLE,
            "timeout",
            format!("computation exceeded {} ms", state.timeout.as_millis()),
        ),
    }
}

async fn verify(State(state): State<AppState>, body: String) -> Response {
    run_blocking(&state, move |s| s.verify_body(&body)).await
}

async fn score(State(state): State<AppState>, body: String) -> Response {
    run_blocking(&state, move |s| s.score_body(&body)).await
}

async fn program(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.scorer.corpus().get(&id) {
        Some(doc) => json_response(StatusCode::OK, to_body(doc)),
        None => score_error(ScoreError::UnknownProgram(id)),
    }
}

async fn health() -> Response {
    json_response(StatusCode::OK, to_body(&json!({"status": "ok"})))
}

pub fn router(scorer: Arc<Scorer>, config: ServiceConfig) -> Router {
    let state = AppState {
        scorer,
        timeout: config.timeout,
    };
    Router::new()
        .route("/verify", post(verify))
        .route("/score", post(score))
        .route("/program/{id}", get(program))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(config.body_limit))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, scorer: Arc<Scorer>, config: ServiceConfig) -> std::io::Result<()> {
    axum::serve(listener, router(scorer, config)).await
}
