//! HTTP + JSON front end: network storage, compilation and inference
//! sessions.
//!
//! | method | path | result |
//! |---|---|---|
//! | POST | `/networks` | 201 `{id, stats}` |
//! | GET | `/networks` | `[{id, hash, compiled}]` |
//! | GET, PUT | `/networks/{id}` | document |
//! | POST | `/networks/{id}/compile` | forest stats |
//! | GET | `/networks/{id}/dot` | Graphviz text |
//! | POST | `/networks/{id}/sessions` | 201 `{session_id}` |
//! | GET | `/sessions/{sid}` | session summary |
//! | POST | `/sessions/{sid}/evidence` | report, or 202 when batched |
//! | POST | `/sessions/{sid}/propagate` | report |
//! | DELETE | `/sessions/{sid}/evidence` | prior report |

mod error;
mod store;

use std::collections::BTreeMap;
use std::future::Future;
use std::path::PathBuf;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use cliquetree::{ForestStats, NetworkDocument, PosteriorReport};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use error::ApiError;
pub use store::{content_hash, NetworkRecord, SessionRecord, Store};

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/networks", post(create_network).get(list_networks))
        .route("/networks/{id}", get(get_network).put(put_network))
        .route("/networks/{id}/compile", post(compile_network))
        .route("/networks/{id}/dot", get(network_dot))
        .route("/networks/{id}/sessions", post(open_session))
        .route("/sessions/{sid}", get(get_session))
        .route("/sessions/{sid}/evidence", post(add_evidence).delete(retract_evidence))
        .route("/sessions/{sid}/propagate", post(propagate))
        .with_state(store)
}

/// Serves until `shutdown` resolves, then writes the snapshot if one was
/// requested.
pub async fn serve(
    listener: tokio::net::TcpListener,
    store: Store,
    snapshot: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(store.clone())).with_graceful_shutdown(shutdown).await?;
    if let Some(path) = snapshot {
        store.save_snapshot(&path)?;
        tracing::info!(path = %path.display(), "snapshot written");
    }
    Ok(())
}

fn parse_document(body: &str) -> Result<NetworkDocument, ApiError> {
    Ok(NetworkDocument::from_json(body)?)
}

#[derive(Serialize)]
struct Created {
    id: String,
    stats: ForestStats,
}

async fn create_network(State(store): State<Store>, body: String) -> Result<impl IntoResponse, ApiError> {
    let id = store.create_network(parse_document(&body)?)?;
    let stats = store.with_network(&id, |r| Ok(r.template()?.stats()))?;
    Ok((StatusCode::CREATED, Json(Created { id, stats })))
}

async fn list_networks(State(store): State<Store>) -> Result<Json<Value>, ApiError> {
    let mut out = Vec::new();
    for id in store.network_ids() {
        out.push(store.with_network(&id, |r| {
            Ok(json!({"id": r.id, "name": r.network.name(), "hash": r.hash, "compiled": r.is_compiled()}))
        })?);
    }
    Ok(Json(Value::Array(out)))
}

async fn get_network(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<NetworkDocument>, ApiError> {
    store.with_network(&id, |r| Ok(Json(r.document.clone())))
}

async fn put_network(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: String,
) -> Result<Json<NetworkDocument>, ApiError> {
    store.replace_network(&id, parse_document(&body)?)?;
    get_network(State(store), Path(id)).await
}

async fn compile_network(State(store): State<Store>, Path(id): Path<String>) -> Result<Json<ForestStats>, ApiError> {
    store.with_network(&id, |r| Ok(Json(r.template()?.stats())))
}

async fn network_dot(State(store): State<Store>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let dot = store.with_network(&id, |r| Ok(r.network.to_dot()))?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], dot))
}

async fn open_session(State(store): State<Store>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let session_id = store.open_session(&id)?;
    Ok((StatusCode::CREATED, Json(json!({"session_id": session_id}))))
}

fn labels(record: &SessionRecord) -> BTreeMap<&str, &str> {
    let net = &record.template.network;
    record
        .evidence
        .iter()
        .map(|(id, value)| {
            let var = net.index_of(id).expect("evidence resolved against this network");
            (id, net.variable(var).values[value].as_str())
        })
        .collect()
}

async fn get_session(State(store): State<Store>, Path(sid): Path<String>) -> Result<Json<Value>, ApiError> {
    store.with_session(&sid, |r| {
        Ok(Json(json!({
            "session_id": r.id,
            "network_id": r.network_id,
            "evidence": labels(r),
            "pending": r.is_pending(),
            "latest": r.latest,
        })))
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvidenceRequest {
    set: BTreeMap<String, String>,
    #[serde(default = "yes")]
    propagate: bool,
}

fn yes() -> bool {
    true
}

async fn add_evidence(
    State(store): State<Store>,
    Path(sid): Path<String>,
    body: String,
) -> Result<axum::response::Response, ApiError> {
    let request: EvidenceRequest = serde_json::from_str(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    store.with_session(&sid, |r| {
        let before = r.evidence.clone();
        r.add(&request.set)?;
        if !request.propagate {
            let body = json!({"accepted": true, "evidence": labels(r)});
            return Ok((StatusCode::ACCEPTED, Json(body)).into_response());
        }
        Ok(Json(r.propagate_or(before)?).into_response())
    })
}

async fn propagate(State(store): State<Store>, Path(sid): Path<String>) -> Result<Json<PosteriorReport>, ApiError> {
    store.with_session(&sid, |r| Ok(Json(r.propagate()?)))
}

async fn retract_evidence(
    State(store): State<Store>,
    Path(sid): Path<String>,
) -> Result<Json<PosteriorReport>, ApiError> {
    store.with_session(&sid, |r| Ok(Json(r.retract()?)))
}
