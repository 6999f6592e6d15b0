use std::sync::Arc;
use std::time::Duration;

use astar_deduce::document::ProgramDoc;
use astar_deduce::scoring::{Corpus, Scorer};
use astar_deduce_cli::service::{router, ServiceConfig};
use astar_deduce_testkit::fixtures;
use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn scorer() -> Arc<Scorer> {
    let mut corpus = Corpus::new();
    corpus.insert(ProgramDoc::from_json(fixtures::BIBLE_JSON).unwrap()).unwrap();
    corpus.insert(ProgramDoc::from_json(fixtures::GARY_JSON).unwrap()).unwrap();
    Arc::new(Scorer::new(corpus))
}

async fn call(config: ServiceConfig, method: &str, uri: &str, body: String) -> (StatusCode, String) {
    let app = router(scorer(), config);
    let req = Request::builder().method(method).uri(uri).body(Body::from(body)).unwrap();
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn post(uri: &str, body: Value) -> (StatusCode, Value) {
    let (status, text) = call(ServiceConfig::default(), "POST", uri, body.to_string()).await;
    assert!(text.ends_with('\n'));
    (status, serde_json::from_str(&text).unwrap())
}

#[tokio::test]
async fn health_and_program_lookup() {
    let (status, body) = call(ServiceConfig::default(), "GET", "/health", String::new()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, "{\"status\":\"ok\"}\n");

    let (status, body) = call(ServiceConfig::default(), "GET", "/program/bible", String::new()).await;
    assert_eq!(status, StatusCode::OK);
    let doc = ProgramDoc::from_json(&body).unwrap();
    assert_eq!(doc.id, "bible");

    let (status, body) = call(ServiceConfig::default(), "GET", "/program/nope", String::new()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body.contains("unknown-program"));
}

#[tokio::test]
async fn score_by_id_matches_in_process_body() {
    let text = fixtures::GARY_PROOF_TEXT;
    let req = json!({"program_id": "gary", "candidate": {"text": text}, "mode": "goal-cone"});
    let (status, raw) = call(ServiceConfig::default(), "POST", "/score", req.to_string()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(raw, scorer().score_body(&req.to_string()).unwrap());
    let body: Value = serde_json::from_str(&raw).unwrap();
    assert_eq!(body["verdict"]["correct"], true);
    assert_eq!(body["rewards"].as_array().unwrap().len(), 4);
}

#[tokio::test]
async fn verify_reports_diagnostics_for_garbage() {
    let req = json!({"program_id": "bible", "candidate": {"text": "Premises: the moon is cheese.\nRule: nope\nConclusion: ?"}});
    let (status, body) = post("/verify", req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["correct"], false);
    assert!(!body["diagnostics"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn error_statuses() {
    let (status, body) = call(ServiceConfig::default(), "POST", "/score", "{not json".into()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body.contains("bad-request"));

    let (status, _) = post("/score", json!({"program_id": "bible", "schema": 7})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = post("/score", json!({"program_id": "missing"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, body) = post("/score", json!({
        "program_id": "bible",
        "goal": {"pred": "ancestor", "args": [{"const": "jacob"}, {"const": "moses"}]},
    })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["kind"], "unprocessable");
}

#[tokio::test]
async fn oversized_body_is_rejected() {
    let config = ServiceConfig {
        body_limit: 64,
        timeout: Duration::from_secs(5),
    };
    let req = json!({"program_id": "bible", "candidate": {"text": "x".repeat(500)}});
    let (status, _) = call(config, "POST", "/score", req.to_string()).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}
