//! Scripted conversations: a seed, a user id and a list of user turns with
//! optional assertions on each reply.
//!
//! The same script can drive the in-process service, the REPL or the HTTP
//! API through [`ReplayDriver`]; transcripts use one line format everywhere.

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::nlu::{AsrHypothesis, AsrInput};
use crate::service::{OpenRequest, Service, ServiceError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayScript {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub user_id: Option<String>,
    pub turns: Vec<ScriptTurn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptTurn {
    /// Typed text, scored 1.0.
    #[serde(default)]
    pub user: Option<String>,
    /// An ASR n-best list instead of typed text.
    #[serde(default)]
    pub hypotheses: Option<Vec<AsrHypothesis>>,
    #[serde(default)]
    pub expect: Option<TurnExpect>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TurnExpect {
    pub origin: Option<String>,
    /// Regex the whole reply must match somewhere.
    pub text: Option<String>,
    /// Exact reply.
    pub reply: Option<String>,
    /// Exact published expectation list.
    pub expectations: Option<Vec<String>>,
    pub end_session: Option<bool>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("turn {0} has neither `user` nor `hypotheses`")]
    EmptyTurn(usize),
    #[error("turn {turn}: {message}")]
    Input { turn: usize, message: String },
    #[error("turn {turn}: bad regex: {source}")]
    Regex {
        turn: usize,
        #[source]
        source: regex::Error,
    },
    #[error("{0}")]
    Driver(String),
}

/// The parts of a turn a transcript and the assertions look at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnView {
    pub reply: String,
    pub origin: String,
    pub expectations: Vec<String>,
    pub end_session: bool,
}

pub trait ReplayDriver {
    fn open(&mut self, seed: u64, user_id: Option<&str>) -> Result<String, String>;
    fn turn(&mut self, session: &str, input: &AsrInput) -> Result<TurnView, String>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub transcript: Vec<String>,
    /// `(turn index, message)` for each failed assertion.
    pub failures: Vec<(usize, String)>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn transcript_text(&self) -> String {
        let mut s = self.transcript.join("\n");
        s.push('\n');
        s
    }
}

pub fn user_line(text: &str) -> String {
    format!("USER: {text}")
}

pub fn bot_line(origin: &str, reply: &str) -> String {
    format!("BOT [{origin}]: {reply}")
}

pub fn parse_script(src: &str) -> Result<ReplayScript, serde_json::Error> {
    serde_json::from_str(src)
}

fn turn_input(i: usize, t: &ScriptTurn) -> Result<AsrInput, ReplayError> {
    match (&t.hypotheses, &t.user) {
        (Some(h), _) => AsrInput::new(h.clone()).map_err(|e| ReplayError::Input {
            turn: i,
            message: e.to_string(),
        }),
        (None, Some(u)) => Ok(AsrInput::text(u.clone())),
        (None, None) => Err(ReplayError::EmptyTurn(i)),
    }
}

fn check(i: usize, e: &TurnExpect, v: &TurnView) -> Result<Vec<String>, ReplayError> {
    let mut out = Vec::new();
    if let Some(o) = &e.origin {
        if *o != v.origin {
            out.push(format!("origin {:?}, expected {o:?}", v.origin));
        }
    }
    if let Some(r) = &e.reply {
        if *r != v.reply {
            out.push(format!("reply {:?}, expected {r:?}", v.reply));
        }
    }
    if let Some(pat) = &e.text {
        let re = Regex::new(pat).map_err(|source| ReplayError::Regex { turn: i, source })?;
        if !re.is_match(&v.reply) {
            out.push(format!("reply {:?} does not match /{pat}/", v.reply));
        }
    }
    if let Some(x) = &e.expectations {
        if *x != v.expectations {
            out.push(format!("expectations {:?}, expected {x:?}", v.expectations));
        }
    }
    if let Some(end) = e.end_session {
        if end != v.end_session {
            out.push(format!("end_session {}, expected {end}", v.end_session));
        }
    }
    Ok(out)
}

/// Plays `script` through `driver`, recording the transcript and every
/// assertion failure. Stops early when the session ends.
pub fn run_script<D: ReplayDriver + ?Sized>(driver: &mut D, script: &ReplayScript) -> Result<ReplayReport, ReplayError> {
    let session = driver.open(script.seed, script.user_id.as_deref()).map_err(ReplayError::Driver)?;
    let mut report = ReplayReport {
        transcript: Vec::new(),
        failures: Vec::new(),
    };
    for (i, t) in script.turns.iter().enumerate() {
        let input = turn_input(i, t)?;
        report.transcript.push(user_line(&input.top().text));
        let view = driver.turn(&session, &input).map_err(ReplayError::Driver)?;
        report.transcript.push(bot_line(&view.origin, &view.reply));
        if let Some(e) = &t.expect {
            report.failures.extend(check(i, e, &view)?.into_iter().map(|m| (i, m)));
        }
        if view.end_session {
            break;
        }
    }
    Ok(report)
}

/// Drives a [`Service`] in process.
pub struct ServiceDriver<'a> {
    pub service: &'a Service,
}

impl ReplayDriver for ServiceDriver<'_> {
    fn open(&mut self, seed: u64, user_id: Option<&str>) -> Result<String, String> {
        self.service
            .open_session(OpenRequest {
                session_id: None,
                user_id: user_id.map(str::to_string),
                seed: Some(seed),
            })
            .map(|s| s.session_id)
            .map_err(|e: ServiceError| e.to_string())
    }

    fn turn(&mut self, session: &str, input: &AsrInput) -> Result<TurnView, String> {
        let r = self.service.turn(session, input).map_err(|e| e.to_string())?;
        Ok(TurnView {
            reply: r.reply,
            origin: r.response.origin.as_str().to_string(),
            expectations: r.expectations,
            end_session: r.end_session,
        })
    }
}
