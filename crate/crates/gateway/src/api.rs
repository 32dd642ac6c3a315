//! The `/v1` JSON API.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use parlor_core::engine::TurnTrace;
use parlor_core::nlu::{AsrHypothesis, AsrInput};
use parlor_core::service::{OpenRequest, Service, ServiceError};

pub type AppState = Arc<Service>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Exists(_) | ServiceError::Busy(_) | ServiceError::Closed(_) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

/// Body of a turn request: typed text or an ASR n-best list.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TurnRequest {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub hypotheses: Option<Vec<AsrHypothesis>>,
}

impl TurnRequest {
    pub fn into_input(self) -> Result<AsrInput, String> {
        match (self.hypotheses, self.text) {
            (Some(h), None) => AsrInput::new(h).map_err(|e| e.to_string()),
            (None, Some(t)) => Ok(AsrInput::text(t)),
            (Some(_), Some(_)) => Err("give either `text` or `hypotheses`, not both".into()),
            (None, None) => Err("missing `text` or `hypotheses`".into()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnResponse {
    pub session_id: String,
    pub turn: u64,
    pub reply: String,
    pub reply_marked: String,
    pub origin_module: String,
    pub expectations: Vec<String>,
    pub end_session: bool,
    pub trace: TurnTrace,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub user_id: Option<String>,
    pub seed: u64,
}

fn parse_body<T: serde::de::DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

async fn create_session(State(svc): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let req: OpenRequest = parse_body(&body)?;
    let s = svc.open_session(req)?;
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id: s.session_id,
            user_id: s.user_id,
            seed: s.rng_seed,
        }),
    ))
}

async fn post_turn(State(svc): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Json<TurnResponse>, ApiError> {
    let req: TurnRequest = parse_body(&body)?;
    let input = req.into_input().map_err(ApiError::bad_request)?;
    let r = svc.turn(&id, &input)?;
    Ok(Json(TurnResponse {
        session_id: id,
        turn: r.new_state.turn_count,
        reply: r.reply,
        reply_marked: r.reply_marked,
        origin_module: r.response.origin.as_str().to_string(),
        expectations: r.expectations,
        end_session: r.end_session,
        trace: r.trace,
    }))
}

async fn get_session(State(svc): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = svc.get_state(&id)?;
    Ok(Json(s).into_response())
}

async fn delete_session(State(svc): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = svc.end_session(&id)?;
    Ok(Json(json!({ "session_id": s.session_id, "ended": true, "turn_count": s.turn_count })).into_response())
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn topics(State(svc): State<AppState>) -> Json<Vec<String>> {
    Json(svc.engine().topic_keys())
}

pub fn router(svc: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/topics", get(topics))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session).delete(delete_session))
        .route("/v1/sessions/{id}/turns", post(post_turn))
        .with_state(svc)
}
