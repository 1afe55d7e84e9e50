use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use cliquetree::{compile, fixtures, query, EvidenceSet, PosteriorReport};
use cliquetree_service::{router, Store};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, String) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn call_json(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, text) = call(app, method, uri, body.map(|b| b.to_string())).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
}

async fn upload(app: &Router, text: &str) -> String {
    let (status, body) = call(app, Method::POST, "/networks", Some(text.to_string())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let body: Value = serde_json::from_str(&body).unwrap();
    body["id"].as_str().unwrap().to_string()
}

async fn open(app: &Router, network: &str) -> String {
    let (status, body) = call_json(app, Method::POST, &format!("/networks/{network}/sessions"), None).await;
    assert_eq!(status, StatusCode::CREATED);
    body["session_id"].as_str().unwrap().to_string()
}

fn asia_query(pairs: &[(&str, &str)]) -> PosteriorReport {
    let net = fixtures::asia();
    let template = Arc::new(compile(&net).unwrap());
    query(&template, &EvidenceSet::from_labels(&net, pairs.iter().copied()).unwrap()).unwrap()
}

fn same_numbers(got: &Value, expected: &PosteriorReport) {
    let got: PosteriorReport = serde_json::from_value(got.clone()).unwrap();
    assert_eq!(got.evidence, expected.evidence);
    assert_eq!(got.p_evidence, expected.p_evidence);
    assert_eq!(got.posteriors, expected.posteriors);
    assert_eq!(got.counters, expected.counters);
}

#[tokio::test]
async fn asia_dyspnea_one_shot() {
    let app = router(Store::new());
    let id = upload(&app, fixtures::ASIA).await;
    let sid = open(&app, &id).await;
    let (status, report) = call_json(
        &app,
        Method::POST,
        &format!("/sessions/{sid}/evidence"),
        Some(json!({"set": {"Dyspnea": "True"}, "propagate": true})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{report}");
    assert_eq!(report["posteriors"].as_object().unwrap().len(), 8);
    same_numbers(&report, &asia_query(&[("Dyspnea", "True")]));
}

#[tokio::test]
async fn batched_equals_one_shot() {
    let app = router(Store::new());
    let id = upload(&app, fixtures::ASIA).await;
    let sid = open(&app, &id).await;
    for (var, label) in [("Dyspnea", "True"), ("Smoking", "False")] {
        let (status, body) = call_json(
            &app,
            Method::POST,
            &format!("/sessions/{sid}/evidence"),
            Some(json!({"set": {var: label}, "propagate": false})),
        )
        .await;
        assert_eq!(status, StatusCode::ACCEPTED, "{body}");
    }
    let (_, summary) = call_json(&app, Method::GET, &format!("/sessions/{sid}"), None).await;
    assert_eq!(summary["pending"], true);
    let (status, report) = call_json(&app, Method::POST, &format!("/sessions/{sid}/propagate"), None).await;
    assert_eq!(status, StatusCode::OK);
    same_numbers(&report, &asia_query(&[("Dyspnea", "True"), ("Smoking", "False")]));

    // A second propagate with nothing pending returns the same report.
    let (_, again) = call_json(&app, Method::POST, &format!("/sessions/{sid}/propagate"), None).await;
    assert_eq!(again, report);
}

#[tokio::test]
async fn retraction_returns_priors() {
    let app = router(Store::new());
    let id = upload(&app, fixtures::ASIA).await;
    let sid = open(&app, &id).await;
    call_json(
        &app,
        Method::POST,
        &format!("/sessions/{sid}/evidence"),
        Some(json!({"set": {"XRay": "True"}, "propagate": true})),
    )
    .await;
    let (status, report) = call_json(&app, Method::DELETE, &format!("/sessions/{sid}/evidence"), None).await;
    assert_eq!(status, StatusCode::OK);
    same_numbers(&report, &asia_query(&[]));
    assert_eq!(report["p_evidence"], 1.0);
}

#[tokio::test]
async fn contradiction_is_409_and_keeps_evidence() {
    let app = router(Store::new());
    let id = upload(&app, fixtures::ASIA).await;
    let sid = open(&app, &id).await;
    let uri = format!("/sessions/{sid}/evidence");
    call_json(&app, Method::POST, &uri, Some(json!({"set": {"Smoking": "True"}}))).await;
    let (status, body) = call_json(&app, Method::POST, &uri, Some(json!({"set": {"Smoking": "False"}}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "contradictory_evidence");
    let (_, summary) = call_json(&app, Method::GET, &format!("/sessions/{sid}"), None).await;
    assert_eq!(summary["evidence"], json!({"Smoking": "True"}));
}

#[tokio::test]
async fn impossible_evidence_is_422_and_rolls_back() {
    let app = router(Store::new());
    let id = upload(&app, fixtures::DETERMINISTIC).await;
    let sid = open(&app, &id).await;
    let uri = format!("/sessions/{sid}/evidence");
    let (status, _) = call_json(&app, Method::POST, &uri, Some(json!({"set": {"A": "a0"}}))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, body) = call_json(&app, Method::POST, &uri, Some(json!({"set": {"B": "b1"}}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body, json!({"error": "impossible_evidence"}));
    let (_, summary) = call_json(&app, Method::GET, &format!("/sessions/{sid}"), None).await;
    assert_eq!(summary["evidence"], json!({"A": "a0"}));
    assert_eq!(summary["pending"], false);
}

#[tokio::test]
async fn replacing_a_network_invalidates_sessions() {
    let app = router(Store::new());
    let id = upload(&app, fixtures::AB).await;
    let sid = open(&app, &id).await;
    let (status, _) = call(&app, Method::PUT, &format!("/networks/{id}"), Some(fixtures::CHAIN.to_string())).await;
    assert_eq!(status, StatusCode::OK);
    let (status, body) = call_json(&app, Method::POST, &format!("/sessions/{sid}/propagate"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body, json!({"error": "network_changed"}));
    let (status, doc) = call_json(&app, Method::GET, &format!("/networks/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(doc, serde_json::from_str::<Value>(fixtures::CHAIN).unwrap());
    // New sessions work against the replacement.
    let sid = open(&app, &id).await;
    let (status, _) = call_json(&app, Method::POST, &format!("/sessions/{sid}/propagate"), None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn validation_errors_are_listed() {
    let app = router(Store::new());
    let mut doc: Value = serde_json::from_str(fixtures::AB).unwrap();
    doc["nodes"][1]["cpt"] = json!([0.5, 0.6, 0.2, 0.8]);
    doc["nodes"][0]["values"] = json!(["only"]);
    let (status, body) = call_json(&app, Method::POST, "/networks", Some(doc)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "invalid_network");
    assert!(body["violations"].as_array().unwrap().len() >= 2, "{body}");

    let (status, _) = call(&app, Method::POST, "/networks", Some("{not json".to_string())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let app = router(Store::new());
    for (method, uri) in [
        (Method::GET, "/networks/n9"),
        (Method::POST, "/networks/n9/compile"),
        (Method::POST, "/networks/n9/sessions"),
        (Method::GET, "/networks/n9/dot"),
        (Method::POST, "/sessions/s9/propagate"),
        (Method::DELETE, "/sessions/s9/evidence"),
    ] {
        let (status, body) = call_json(&app, method, uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(body, json!({"error": "not_found"}));
    }
}

#[tokio::test]
async fn compile_and_dot() {
    let app = router(Store::new());
    let id = upload(&app, fixtures::AB).await;
    let (status, stats) = call_json(&app, Method::POST, &format!("/networks/{id}/compile"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stats, json!({"cliques":1,"trees":1,"max_clique_vars":2,"clique_cells":4,"separator_cells":0}));
    let (status, dot) = call(&app, Method::GET, &format!("/networks/{id}/dot"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(dot.starts_with("digraph"));
    let (_, list) = call_json(&app, Method::GET, "/networks", None).await;
    assert_eq!(list[0]["compiled"], true);
}

#[test]
fn snapshot_round_trip() {
    let store = Store::new();
    store.create_network(cliquetree::NetworkDocument::from_json(fixtures::ASIA).unwrap()).unwrap();
    let path = std::env::temp_dir().join(format!("cliquetree-snapshot-{}.json", std::process::id()));
    store.save_snapshot(&path).unwrap();
    let restored = Store::load_snapshot(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(restored.documents(), store.documents());
    let next = restored.create_network(cliquetree::NetworkDocument::from_json(fixtures::AB).unwrap()).unwrap();
    assert_eq!(next, "n2");
}
