use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};

use cyclekit::cycle::CycleError;
use cyclekit::figure::FigureError;
use cyclekit::render::RenderError;
use cyclekit::symkern::SymError;

/// Error body `{code, message, details}` with its HTTP status.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError { status, code, message: message.into(), details: Value::Null }
    }

    pub fn with_details(mut self, details: Value) -> ApiError {
        self.details = details;
        self
    }

    pub fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn revision_conflict(expected: u64, current: u64) -> ApiError {
        ApiError::new(StatusCode::CONFLICT, "RevisionConflict", format!("expected revision {expected}, current is {current}"))
            .with_details(json!({ "expected_revision": expected, "current_revision": current }))
    }

    pub fn internal(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "details": self.details });
        (self.status, Json(body)).into_response()
    }
}

impl From<FigureError> for ApiError {
    fn from(e: FigureError) -> ApiError {
        use FigureError::*;
        let message = e.to_string();
        let (status, code, details) = match &e {
            ParseError { line, column, .. } => (StatusCode::BAD_REQUEST, "ParseError", json!({ "line": line, "column": column })),
            InvalidLabel(l) => (StatusCode::BAD_REQUEST, "InvalidLabel", json!({ "label": l })),
            NoRelations => (StatusCode::BAD_REQUEST, "NoRelations", Value::Null),
            UnsupportedKind(k) => (StatusCode::BAD_REQUEST, "UnsupportedKind", json!({ "kind": k })),
            UnsupportedDimension(d) => (StatusCode::BAD_REQUEST, "UnsupportedDimension", json!({ "dim": d })),
            SchemaVersionMismatch(v) => (StatusCode::BAD_REQUEST, "SchemaVersionMismatch", json!({ "version": v })),
            DuplicateLabel(l) => (StatusCode::CONFLICT, "DuplicateLabel", json!({ "label": l })),
            UnknownKey(k) => (StatusCode::NOT_FOUND, "UnknownKey", json!({ "key": k })),
            UnknownTarget(t) => (StatusCode::UNPROCESSABLE_ENTITY, "UnknownTarget", json!({ "target": t })),
            UnsatisfiableRelations { label, details } => (
                StatusCode::UNPROCESSABLE_ENTITY,
                "UnsatisfiableRelations",
                json!({ "label": label, "diagnostics": details.split("; ").filter(|s| !s.is_empty()).collect::<Vec<_>>() }),
            ),
            NotARoot(k) => (StatusCode::CONFLICT, "NotARoot", json!({ "key": k })),
            HasDependents { key, dependents } => (StatusCode::CONFLICT, "HasDependents", json!({ "key": key, "dependents": dependents })),
            ReservedNode(k) => (StatusCode::CONFLICT, "ReservedNode", json!({ "key": k })),
            ArityMismatch { expected, got } => (StatusCode::UNPROCESSABLE_ENTITY, "ArityMismatch", json!({ "expected": expected, "got": got })),
            InvalidSubfigure(_) => (StatusCode::UNPROCESSABLE_ENTITY, "InvalidSubfigure", Value::Null),
            Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "Internal", Value::Null),
            Cycle(CycleError::Syntax(_)) | Cycle(CycleError::Sym(SymError::Parse { .. })) | Sym(SymError::Parse { .. }) => (StatusCode::BAD_REQUEST, "ParseError", Value::Null),
            Cycle(_) => (StatusCode::UNPROCESSABLE_ENTITY, "CycleError", Value::Null),
            Sym(_) => (StatusCode::UNPROCESSABLE_ENTITY, "SymbolicError", Value::Null),
        };
        ApiError { status, code, message, details }
    }
}

impl From<RenderError> for ApiError {
    fn from(e: RenderError) -> ApiError {
        let message = e.to_string();
        let (status, code, details) = match &e {
            RenderError::MissingAssignment(names) => (StatusCode::UNPROCESSABLE_ENTITY, "MissingAssignment", json!({ "missing": names })),
            RenderError::NonNumeric(names) => (StatusCode::UNPROCESSABLE_ENTITY, "NonNumeric", json!({ "params": names })),
            RenderError::InvalidViewport(_) => (StatusCode::BAD_REQUEST, "InvalidViewport", Value::Null),
            RenderError::TooDeep(d) => (StatusCode::BAD_REQUEST, "TooDeep", json!({ "depth": d })),
            RenderError::UnboundedDegenerate => (StatusCode::UNPROCESSABLE_ENTITY, "UnboundedDegenerate", Value::Null),
            RenderError::Cycle(_) => (StatusCode::UNPROCESSABLE_ENTITY, "CycleError", Value::Null),
        };
        ApiError { status, code, message, details }
    }
}
