use std::path::Path;
use std::sync::Arc;

use attrib_core::attribution::attribute_hierarchical;
use attrib_core::chat::ScriptedChat;
use attrib_core::scoring::{CachedScorer, LexicalScorer, Scorer};
use attrib_core::{Dialogue, TargetResponse};
use attrib_service::{router, AppState};
use axum::body::{to_bytes, Body, Bytes};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

const TEACHER: [&str; 3] = [
    "He hits classmates during recess. He skips homework.",
    "His parents work late.",
    "He loves drawing comics. He responds well to praise from adults.",
];

const SCRIPT: [&str; 3] =
    ["How often does this happen?", "What motivates him?", "Use praise from adults as reinforcement."];

fn state(store: &Path, script: &[&str]) -> Arc<AppState> {
    let scorer: Arc<dyn Scorer> = Arc::new(LexicalScorer);
    AppState::new(store, CachedScorer::new(scorer), Arc::new(ScriptedChat::new(script.iter().copied())), None).unwrap()
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Bytes) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    (status, to_bytes(response.into_body(), usize::MAX).await.unwrap())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn new_session(app: &Router) -> String {
    let (status, body) = call_json(app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    body["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn scripted_session_round_trips_across_restart() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("sessions.jsonl");
    let app = router(state(&store, &SCRIPT));
    let id = new_session(&app).await;

    for (text, expected) in TEACHER.iter().zip(SCRIPT) {
        let (status, body) =
            call_json(&app, "POST", &format!("/sessions/{id}/messages"), Some(json!({ "text": text }))).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["reply"], expected);
    }

    let (status, result) = call_json(&app, "POST", &format!("/sessions/{id}/attribute"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(result["method"], "hierarchical");
    assert_eq!(result["target"], SCRIPT[2]);
    let evidence = &result["evidence"];
    assert_eq!(evidence["text"], "He responds well to praise from adults.");
    let mut dialogue = Dialogue::empty(id.clone());
    for (text, reply) in TEACHER.iter().zip(SCRIPT) {
        dialogue.push_turn(*text, reply);
    }
    let target = TargetResponse::new(SCRIPT[2]).unwrap();
    let direct = attribute_hierarchical(&dialogue.truncated(3, true), &target, &LexicalScorer).unwrap();
    assert_eq!(serde_json::to_value(&direct).unwrap(), result);
    let turn = evidence["turn_index"].as_u64().unwrap() as usize;
    let (start, end) = (
        evidence["span"]["start_char"].as_u64().unwrap() as usize,
        evidence["span"]["end_char"].as_u64().unwrap() as usize,
    );
    let highlighted: String = TEACHER[turn - 1].chars().skip(start).take(end - start).collect();
    assert_eq!(highlighted, evidence["text"].as_str().unwrap());

    let (status, explanation) = call_json(&app, "POST", &format!("/sessions/{id}/explain"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(explanation["generator"], "template");
    assert!(explanation["narrative"].as_str().unwrap().contains("He responds well to praise from adults."));

    let (_, before) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    drop(app);

    let app = router(state(&store, &SCRIPT));
    let (status, after) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);

    // A second restart reads the compacted log and still agrees.
    drop(app);
    let app = router(state(&store, &SCRIPT));
    assert_eq!(call(&app, "GET", &format!("/sessions/{id}"), None).await.1, before);
}

#[tokio::test]
async fn create_then_get_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(state(&dir.path().join("s.jsonl"), &SCRIPT));
    let id = new_session(&app).await;
    let (status, session) = call_json(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(session["id"], id.as_str());
    assert_eq!(session["dialogue"]["turns"], json!([]));
    assert_eq!(session["last_attribution"], Value::Null);
    assert_eq!(session["created_at"], session["updated_at"]);
}

#[tokio::test]
async fn unknown_sessions_are_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(state(&dir.path().join("s.jsonl"), &SCRIPT));
    for (method, uri, body) in [
        ("GET", "/sessions/nope", None),
        ("POST", "/sessions/nope/messages", Some(json!({ "text": "Hi." }))),
        ("POST", "/sessions/nope/attribute", None),
        ("POST", "/sessions/nope/explain", None),
    ] {
        let (status, body) = call_json(&app, method, uri, body).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{method} {uri}");
        assert!(body["error"].as_str().unwrap().contains("nope"));
    }
}

#[tokio::test]
async fn conflicts_before_there_is_anything_to_attribute_or_explain() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(state(&dir.path().join("s.jsonl"), &[""]));
    let id = new_session(&app).await;
    assert_eq!(call(&app, "POST", &format!("/sessions/{id}/attribute"), None).await.0, StatusCode::CONFLICT);
    assert_eq!(call(&app, "POST", &format!("/sessions/{id}/explain"), None).await.0, StatusCode::CONFLICT);

    // The only reply is empty, so there is no default target.
    call(&app, "POST", &format!("/sessions/{id}/messages"), Some(json!({ "text": "He hits." }))).await;
    let (status, body) = call_json(&app, "POST", &format!("/sessions/{id}/attribute"), Some(json!({}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains("reply"));

    let (status, _) =
        call(&app, "POST", &format!("/sessions/{id}/attribute"), Some(json!({ "target": "Stop the hitting." }))).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn backend_failure_does_not_append_a_turn() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s.jsonl");
    let app = router(state(&store, &SCRIPT[..1]));
    let id = new_session(&app).await;
    let uri = format!("/sessions/{id}/messages");
    assert_eq!(call(&app, "POST", &uri, Some(json!({ "text": "One." }))).await.0, StatusCode::OK);
    assert_eq!(call(&app, "POST", &uri, Some(json!({ "text": "Two." }))).await.0, StatusCode::BAD_GATEWAY);

    let (_, session) = call_json(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(session["dialogue"]["turns"].as_array().unwrap().len(), 1);
    drop(app);
    let app = router(state(&store, &SCRIPT[..1]));
    let (_, session) = call_json(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(session["dialogue"]["turns"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(state(&dir.path().join("s.jsonl"), &SCRIPT));
    let id = new_session(&app).await;
    let messages = format!("/sessions/{id}/messages");
    assert_eq!(call(&app, "POST", &messages, Some(json!({ "text": "  " }))).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "POST", &messages, None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "POST", &messages, Some(json!({ "txt": "x" }))).await.0, StatusCode::BAD_REQUEST);

    call(&app, "POST", &messages, Some(json!({ "text": TEACHER[0] }))).await;
    let attribute = format!("/sessions/{id}/attribute");
    assert_eq!(call(&app, "POST", &attribute, Some(json!({ "method": "magic" }))).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "POST", &attribute, Some(json!({ "target": "" }))).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn similarity_makes_no_scorer_calls() {
    let dir = tempfile::tempdir().unwrap();
    let state = state(&dir.path().join("s.jsonl"), &SCRIPT);
    let app = router(Arc::clone(&state));
    let id = new_session(&app).await;
    for text in TEACHER {
        call(&app, "POST", &format!("/sessions/{id}/messages"), Some(json!({ "text": text }))).await;
    }
    let uri = format!("/sessions/{id}/attribute");
    let (status, result) = call_json(&app, "POST", &uri, Some(json!({ "method": "similarity" }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(result["method"], "similarity");
    assert_eq!(state.scorer_telemetry().requests, 0);

    call(&app, "POST", &uri, Some(json!({ "method": "hierarchical" }))).await;
    assert!(state.scorer_telemetry().requests > 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn messages_on_one_session_are_serialized() {
    let dir = tempfile::tempdir().unwrap();
    let script: Vec<String> = (1..=8).map(|k| format!("Reply {k}?")).collect();
    let script: Vec<&str> = script.iter().map(String::as_str).collect();
    let app = router(state(&dir.path().join("s.jsonl"), &script));
    let (a, b) = (new_session(&app).await, new_session(&app).await);

    let mut tasks = Vec::new();
    for k in 0..8 {
        for id in [&a, &b] {
            let app = app.clone();
            let uri = format!("/sessions/{id}/messages");
            tasks.push(tokio::spawn(async move {
                call(&app, "POST", &uri, Some(json!({ "text": format!("Note {k}.") }))).await.0
            }));
        }
    }
    for task in tasks {
        assert_eq!(task.await.unwrap(), StatusCode::OK);
    }
    for id in [&a, &b] {
        let (_, session) = call_json(&app, "GET", &format!("/sessions/{id}"), None).await;
        let turns = session["dialogue"]["turns"].as_array().unwrap();
        let replies: Vec<&str> = turns.iter().map(|t| t["assistant"].as_str().unwrap()).collect();
        assert_eq!(replies, script);
    }
}
