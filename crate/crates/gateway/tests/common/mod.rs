//! Gateway test helpers: an HTTP replay driver and the cross-surface
//! determinism check.

#![allow(dead_code)]

#[path = "../../../core/tests/support/mod.rs"]
pub mod core_support;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use parlor_core::nlu::AsrInput;
use parlor_core::replay::{parse_script, run_script, ReplayDriver, ReplayScript, ServiceDriver, TurnView};
use parlor_gateway::api::router;
use parlor_gateway::repl::{run_repl, ReplOptions};
use serde_json::{json, Value};
use std::sync::Arc;
use tower::ServiceExt;

use core_support::criteria::{replay_path, REPLAY_SCRIPTS};
use core_support::Fixture;

/// Sends one request through the router without a socket.
pub async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(Body::from(body.unwrap_or("").to_string())).expect("request builds");
    let resp = app.clone().oneshot(req).await.expect("router is infallible");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body reads").to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).expect("JSON body") };
    (status, value)
}

pub fn app(fx: &Fixture) -> Router {
    router(Arc::new(fx.service()))
}

/// Replays scripts over the `/v1` API.
pub struct HttpDriver {
    pub app: Router,
    pub rt: tokio::runtime::Runtime,
}

impl HttpDriver {
    pub fn new(app: Router) -> Self {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().expect("runtime");
        Self { app, rt }
    }
}

impl ReplayDriver for HttpDriver {
    fn open(&mut self, seed: u64, user_id: Option<&str>) -> Result<String, String> {
        let body = json!({ "seed": seed, "user_id": user_id }).to_string();
        let (status, v) = self.rt.block_on(call(&self.app, Method::POST, "/v1/sessions", Some(&body)));
        if status != StatusCode::CREATED {
            return Err(format!("open: {status} {v}"));
        }
        Ok(v["session_id"].as_str().unwrap_or_default().to_string())
    }

    fn turn(&mut self, session: &str, input: &AsrInput) -> Result<TurnView, String> {
        let body = json!({ "hypotheses": input.hypotheses() }).to_string();
        let uri = format!("/v1/sessions/{session}/turns");
        let (status, v) = self.rt.block_on(call(&self.app, Method::POST, &uri, Some(&body)));
        if status != StatusCode::OK {
            return Err(format!("turn: {status} {v}"));
        }
        serde_json::from_value(json!({
            "reply": v["reply"],
            "origin": v["origin_module"],
            "expectations": v["expectations"],
            "end_session": v["end_session"],
        }))
        .map_err(|e| e.to_string())
    }
}

/// Transcript of `script` typed into the REPL in transcript mode.
pub fn repl_transcript(fx: &Fixture, script: &ReplayScript) -> Result<String, String> {
    let mut input = format!("/seed {}\n", script.seed);
    if let Some(u) = &script.user_id {
        input.push_str(&format!("/user {u}\n"));
    }
    for t in &script.turns {
        let text = t.user.as_ref().ok_or("REPL scripts need typed turns")?;
        input.push_str(text);
        input.push('\n');
    }
    let mut out = Vec::new();
    run_repl(&fx.service(), input.as_bytes(), &mut out, ReplOptions { transcript: true }).map_err(|e| e.to_string())?;
    String::from_utf8(out).map_err(|e| e.to_string())
}

/// Scripts used for the determinism check: the transcript replays plus a
/// longer tour through flows, games and activities.
pub fn determinism_scripts() -> Result<Vec<(String, ReplayScript)>, String> {
    let mut out = Vec::new();
    for name in REPLAY_SCRIPTS {
        let src = std::fs::read_to_string(replay_path(name)).map_err(|e| e.to_string())?;
        out.push((name.to_string(), parse_script(&src).map_err(|e| e.to_string())?));
    }
    let tour = [
        "hello", "I like video games", "building games", "yes", "I like dogs", "let's play a game", "trivia", "I don't know",
        "stop", "no", "what can we talk about", "books", "tell me a joke", "what is the population of mexico city",
        "I love music", "let's talk about dinosaurs", "tell me a story", "keep going", "goodbye",
    ];
    for seed in [1u64, 99, 123_456_789] {
        let turns: Vec<Value> = tour.iter().map(|t| json!({ "user": t })).collect();
        let script = serde_json::from_value(json!({ "seed": seed, "turns": turns })).map_err(|e| e.to_string())?;
        out.push((format!("tour seed {seed}"), script));
    }
    Ok(out)
}

pub fn determinism() -> Result<String, String> {
    let scripts = determinism_scripts()?;
    let mut lines = 0;
    for (name, script) in &scripts {
        let first = run_script(&mut ServiceDriver { service: &Fixture::new().service() }, script).map_err(|e| e.to_string())?;
        let second = run_script(&mut ServiceDriver { service: &Fixture::new().service() }, script).map_err(|e| e.to_string())?;
        let text = first.transcript_text();
        if text != second.transcript_text() {
            return Err(format!("{name}: two in-process runs differ"));
        }
        let http = run_script(&mut HttpDriver::new(app(&Fixture::new())), script).map_err(|e| e.to_string())?;
        if http.transcript_text() != text {
            return Err(format!("{name}: HTTP transcript differs\n{}\nvs\n{text}", http.transcript_text()));
        }
        let repl = repl_transcript(&Fixture::new(), script)?;
        if repl != text {
            return Err(format!("{name}: REPL transcript differs\n{repl}\nvs\n{text}"));
        }
        lines += first.transcript.len();
    }
    Ok(format!("{} scripts, {lines} transcript lines byte-identical across two runs, REPL and HTTP", scripts.len()))
}
