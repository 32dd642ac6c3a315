//! Declarative matchers over the next user utterance, and the registry of
//! named functions they and flow postconditions may reference.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::candidate::StateUpdate;
use crate::memory::SessionState;
use crate::nlu::{DialogueAct, UtteranceAnalysis};
use crate::text::{contains_phrase, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordMode {
    #[default]
    Any,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Matcher {
    /// Phrases matched on token boundaries against every ASR hypothesis.
    KeywordSet { words: Vec<String>, mode: KeywordMode },
    DialogueActIs { act: DialogueAct },
    /// Inclusive on both ends.
    SentimentRange { lo: f64, hi: f64 },
    Predicate { name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub id: String,
    pub matcher: Matcher,
    /// A consumed expectation cannot fire again in the same flow episode.
    #[serde(default)]
    pub consume: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExpectationError {
    #[error("expectation `{0}` has an empty keyword set")]
    EmptyKeywords(String),
    #[error("expectation `{id}` has sentiment range [{lo}, {hi}] with lo > hi or outside [-1, 1]")]
    BadSentimentRange { id: String, lo: f64, hi: f64 },
    #[error("expectation `{id}` references unregistered predicate `{name}`")]
    UnknownPredicate { id: String, name: String },
}

impl Expectation {
    /// Load-time checks; a validated expectation never fails at match time.
    pub fn validate(&self, registry: &FunctionRegistry) -> Result<(), ExpectationError> {
        match &self.matcher {
            Matcher::KeywordSet { words, .. } => {
                if words.iter().all(|w| tokenize(w).is_empty()) {
                    return Err(ExpectationError::EmptyKeywords(self.id.clone()));
                }
            }
            Matcher::SentimentRange { lo, hi } => {
                if !(lo <= hi && *lo >= -1.0 && *hi <= 1.0) {
                    return Err(ExpectationError::BadSentimentRange {
                        id: self.id.clone(),
                        lo: *lo,
                        hi: *hi,
                    });
                }
            }
            Matcher::Predicate { name } => {
                if !registry.has_predicate(name) {
                    return Err(ExpectationError::UnknownPredicate {
                        id: self.id.clone(),
                        name: name.clone(),
                    });
                }
            }
            Matcher::DialogueActIs { .. } => {}
        }
        Ok(())
    }
}

/// Whether `e` is satisfied by this user turn.
pub fn match_expectation(
    e: &Expectation,
    analysis: &UtteranceAnalysis,
    session: &SessionState,
    registry: &FunctionRegistry,
) -> bool {
    match &e.matcher {
        Matcher::KeywordSet { words, mode } => {
            let phrases: Vec<Vec<String>> = words.iter().map(|w| tokenize(w)).filter(|p| !p.is_empty()).collect();
            if phrases.is_empty() {
                return false;
            }
            let mut hyps = analysis.hypothesis_tokens();
            // the coreference rewrite can surface a keyword the raw text lacks
            hyps.push(analysis.tokens.clone());
            hyps.iter().any(|toks| match mode {
                KeywordMode::Any => phrases.iter().any(|p| contains_phrase(toks, p)),
                KeywordMode::All => phrases.iter().all(|p| contains_phrase(toks, p)),
            })
        }
        Matcher::DialogueActIs { act } => analysis.dialogue_act == *act,
        Matcher::SentimentRange { lo, hi } => *lo <= analysis.sentiment && analysis.sentiment <= *hi,
        Matcher::Predicate { name } => registry.predicate(name).is_some_and(|f| f(analysis, session)),
    }
}

pub type PredicateFn = fn(&UtteranceAnalysis, &SessionState) -> bool;
pub type ActionFn = fn(&UtteranceAnalysis, &SessionState) -> Vec<StateUpdate>;

/// Named pure functions registered at startup and referenced by flows.
#[derive(Clone, Default)]
pub struct FunctionRegistry {
    predicates: BTreeMap<String, PredicateFn>,
    /// Each action with the flow variables it may set.
    actions: BTreeMap<String, (ActionFn, Vec<String>)>,
}

impl fmt::Debug for FunctionRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionRegistry")
            .field("predicates", &self.predicates.keys().collect::<Vec<_>>())
            .field("actions", &self.actions.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl FunctionRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry preloaded with the built-in predicates and actions.
    pub fn builtin() -> Self {
        let mut r = Self::default();
        r.register_predicate("mentions_entity", |a, _| !a.entities.is_empty());
        r.register_predicate("positive_sentiment", |a, _| a.sentiment > 0.0);
        r.register_predicate("negative_sentiment", |a, _| a.sentiment < 0.0);
        r.register_predicate("is_question", |a, _| a.dialogue_act == DialogueAct::Question);
        r.register_predicate("has_topic", |a, _| a.topic.is_some());
        r.register_predicate("knows_user_name", |_, s| s.user_name.is_some());
        r.register_action("remember_entity", &["entity"], |a, _| {
            a.entities
                .first()
                .map(|e| StateUpdate::SetVar {
                    name: "entity".into(),
                    value: e.surface.clone(),
                })
                .into_iter()
                .collect()
        });
        r.register_action("remember_topic", &[], |a, _| {
            a.topic
                .iter()
                .map(|t| StateUpdate::MarkTopicExplored { topic: t.clone() })
                .collect()
        });
        r
    }

    pub fn register_predicate(&mut self, name: &str, f: PredicateFn) {
        self.predicates.insert(name.to_string(), f);
    }

    /// Registers an action; `defines` lists the flow variables it may set,
    /// which the flow validator treats as possibly unbound.
    pub fn register_action(&mut self, name: &str, defines: &[&str], f: ActionFn) {
        self.actions
            .insert(name.to_string(), (f, defines.iter().map(|d| d.to_string()).collect()));
    }

    pub fn action_defines(&self, name: &str) -> &[String] {
        self.actions.get(name).map(|(_, d)| d.as_slice()).unwrap_or(&[])
    }

    pub fn has_predicate(&self, name: &str) -> bool {
        self.predicates.contains_key(name)
    }

    pub fn has_action(&self, name: &str) -> bool {
        self.actions.contains_key(name)
    }

    pub fn predicate(&self, name: &str) -> Option<PredicateFn> {
        self.predicates.get(name).copied()
    }

    /// Runs a registered action; unknown names yield no updates (flows are
    /// validated against the registry before they can reach this).
    pub fn call_action(&self, name: &str, analysis: &UtteranceAnalysis, session: &SessionState) -> Vec<StateUpdate> {
        self.actions
            .get(name)
            .map(|(f, _)| f(analysis, session))
            .unwrap_or_default()
    }
}
