use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cliquetree::{Error, Violation};
use serde_json::json;

/// Every failure the API reports, with its status and JSON body.
#[derive(Debug)]
pub enum ApiError {
    NotFound,
    NetworkChanged,
    BadRequest(String),
    Invalid(Vec<Violation>),
    Contradictory { variable: String, existing: String, requested: String },
    UnknownEvidence(String),
    ImpossibleEvidence,
    TooLarge(String),
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        match err {
            Error::Syntax { .. } => ApiError::BadRequest(err.to_string()),
            Error::Invalid(report) => ApiError::Invalid(report.violations),
            Error::Cycle(variables) => ApiError::Invalid(vec![Violation::Cycle { variables }]),
            Error::UnknownVariable(_) | Error::UnknownValue { .. } => ApiError::UnknownEvidence(err.to_string()),
            Error::ContradictoryEvidence { variable, existing, requested } => {
                ApiError::Contradictory { variable, existing, requested }
            }
            Error::ImpossibleEvidence => ApiError::ImpossibleEvidence,
            Error::StateSpaceTooLarge { .. } => ApiError::TooLarge(err.to_string()),
            Error::NotPropagated | Error::NotChordal | Error::FamilyNotCovered(_) => {
                ApiError::BadRequest(err.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound => (StatusCode::NOT_FOUND, json!({"error": "not_found"})),
            ApiError::NetworkChanged => (StatusCode::CONFLICT, json!({"error": "network_changed"})),
            ApiError::BadRequest(message) => {
                (StatusCode::BAD_REQUEST, json!({"error": "bad_request", "message": message}))
            }
            ApiError::Invalid(violations) => {
                (StatusCode::UNPROCESSABLE_ENTITY, json!({"error": "invalid_network", "violations": violations}))
            }
            ApiError::Contradictory { variable, existing, requested } => (
                StatusCode::CONFLICT,
                json!({
                    "error": "contradictory_evidence",
                    "variable": variable,
                    "existing": existing,
                    "requested": requested,
                }),
            ),
            ApiError::UnknownEvidence(message) => {
                (StatusCode::UNPROCESSABLE_ENTITY, json!({"error": "unknown_evidence", "message": message}))
            }
            ApiError::ImpossibleEvidence => (StatusCode::UNPROCESSABLE_ENTITY, json!({"error": "impossible_evidence"})),
            ApiError::TooLarge(message) => {
                (StatusCode::UNPROCESSABLE_ENTITY, json!({"error": "cap_exceeded", "message": message}))
            }
        };
        (status, Json(body)).into_response()
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ApiError::NotFound => f.write_str("not found"),
            ApiError::NetworkChanged => f.write_str("network changed since the session was opened"),
            ApiError::BadRequest(m) | ApiError::UnknownEvidence(m) | ApiError::TooLarge(m) => f.write_str(m),
            ApiError::Invalid(violations) => {
                let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
                write!(f, "invalid network: {}", lines.join("; "))
            }
            ApiError::Contradictory { variable, existing, requested } => {
                write!(f, "`{variable}` is observed as `{existing}`, not `{requested}`")
            }
            ApiError::ImpossibleEvidence => f.write_str("evidence has zero probability"),
        }
    }
}

impl std::error::Error for ApiError {}
