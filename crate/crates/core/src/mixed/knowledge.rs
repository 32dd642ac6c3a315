//! Knowledge sources for question answering, queried in a fixed order:
//! exact fact store, encyclopedia summaries, web instant answers.
//!
//! The bundled sources are offline fixtures backed by LTM namespaces. A
//! networked client can implement [`KnowledgeSource`] and be wrapped in
//! [`TimeoutSource`] so a slow or failing backend falls through to the next
//! source instead of stalling the turn.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::mpsc;
use std::sync::{Arc, LazyLock};
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    ExactFactStore,
    EncyclopediaSummaries,
    WebInstantAnswers,
}

impl SourceKind {
    /// Base confidence for an answer from this kind of source.
    pub fn confidence(self) -> f64 {
        match self {
            SourceKind::ExactFactStore => 0.9,
            SourceKind::EncyclopediaSummaries => 0.85,
            SourceKind::WebInstantAnswers => 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    Fixture,
    Live,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeQuery {
    /// Normalized query text, e.g. "population of mexico city".
    pub text: String,
    pub content_words: BTreeSet<String>,
    /// Canonical entity ids, most salient first.
    pub entities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeAnswer {
    pub source: SourceKind,
    pub id: String,
    pub text: String,
}

#[derive(Debug, thiserror::Error)]
pub enum KnowledgeError {
    #[error("{0} timed out")]
    Timeout(String),
    #[error("{source_name}: {message}")]
    Backend { source_name: String, message: String },
}

pub trait KnowledgeSource: Send + Sync {
    fn name(&self) -> &str;
    fn kind(&self) -> SourceKind;
    fn mode(&self) -> SourceMode;
    fn lookup(&self, query: &KnowledgeQuery) -> Result<Option<KnowledgeAnswer>, KnowledgeError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactFact {
    pub id: String,
    pub keywords: Vec<String>,
    pub entities: Vec<String>,
    pub answer: String,
}

/// Facts that answer when all their keywords and entities are in the query;
/// the most specific matching fact wins.
#[derive(Debug, Clone, Default)]
pub struct ExactFactStore {
    facts: Vec<ExactFact>,
}

impl ExactFactStore {
    pub fn new(facts: Vec<ExactFact>) -> Self {
        Self { facts }
    }
}

impl KnowledgeSource for ExactFactStore {
    fn name(&self) -> &str {
        "kb_exact"
    }
    fn kind(&self) -> SourceKind {
        SourceKind::ExactFactStore
    }
    fn mode(&self) -> SourceMode {
        SourceMode::Fixture
    }
    fn lookup(&self, q: &KnowledgeQuery) -> Result<Option<KnowledgeAnswer>, KnowledgeError> {
        let best = self
            .facts
            .iter()
            .filter(|f| !f.keywords.is_empty() || !f.entities.is_empty())
            .filter(|f| f.keywords.iter().all(|k| q.content_words.contains(k)))
            .filter(|f| f.entities.iter().all(|e| q.entities.contains(e)))
            .fold(None::<&ExactFact>, |best, f| match best {
                Some(b) if b.keywords.len() + b.entities.len() >= f.keywords.len() + f.entities.len() => Some(b),
                _ => Some(f),
            });
        Ok(best.map(|f| KnowledgeAnswer {
            source: self.kind(),
            id: f.id.clone(),
            text: f.answer.clone(),
        }))
    }
}

/// One short summary per entity.
#[derive(Debug, Clone, Default)]
pub struct EncyclopediaStore {
    summaries: BTreeMap<String, String>,
}

impl EncyclopediaStore {
    pub fn new(summaries: BTreeMap<String, String>) -> Self {
        Self { summaries }
    }

    pub fn summary(&self, entity: &str) -> Option<&str> {
        self.summaries.get(entity).map(String::as_str)
    }
}

impl KnowledgeSource for EncyclopediaStore {
    fn name(&self) -> &str {
        "kb_encyclopedia"
    }
    fn kind(&self) -> SourceKind {
        SourceKind::EncyclopediaSummaries
    }
    fn mode(&self) -> SourceMode {
        SourceMode::Fixture
    }
    fn lookup(&self, q: &KnowledgeQuery) -> Result<Option<KnowledgeAnswer>, KnowledgeError> {
        Ok(q.entities.iter().find_map(|e| {
            self.summaries.get(e).map(|s| KnowledgeAnswer {
                source: self.kind(),
                id: e.clone(),
                text: s.clone(),
            })
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebAnswer {
    pub id: String,
    pub keywords: Vec<String>,
    pub answer: String,
}

/// Keyword-indexed instant answers.
#[derive(Debug, Clone, Default)]
pub struct WebAnswerStore {
    entries: Vec<WebAnswer>,
}

impl WebAnswerStore {
    pub fn new(entries: Vec<WebAnswer>) -> Self {
        Self { entries }
    }
}

impl KnowledgeSource for WebAnswerStore {
    fn name(&self) -> &str {
        "kb_web"
    }
    fn kind(&self) -> SourceKind {
        SourceKind::WebInstantAnswers
    }
    fn mode(&self) -> SourceMode {
        SourceMode::Fixture
    }
    fn lookup(&self, q: &KnowledgeQuery) -> Result<Option<KnowledgeAnswer>, KnowledgeError> {
        let best = self
            .entries
            .iter()
            .filter(|w| !w.keywords.is_empty() && w.keywords.iter().all(|k| q.content_words.contains(k)))
            .fold(None::<&WebAnswer>, |best, w| match best {
                Some(b) if b.keywords.len() >= w.keywords.len() => Some(b),
                _ => Some(w),
            });
        Ok(best.map(|w| KnowledgeAnswer {
            source: self.kind(),
            id: w.id.clone(),
            text: w.answer.clone(),
        }))
    }
}

/// Runs a source on a worker thread and gives up after `timeout`.
pub struct TimeoutSource {
    inner: Arc<dyn KnowledgeSource>,
    timeout: Duration,
}

impl TimeoutSource {
    pub fn new(inner: Arc<dyn KnowledgeSource>, timeout: Duration) -> Self {
        Self { inner, timeout }
    }
}

impl KnowledgeSource for TimeoutSource {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn kind(&self) -> SourceKind {
        self.inner.kind()
    }
    fn mode(&self) -> SourceMode {
        self.inner.mode()
    }
    fn lookup(&self, q: &KnowledgeQuery) -> Result<Option<KnowledgeAnswer>, KnowledgeError> {
        let (tx, rx) = mpsc::channel();
        let inner = Arc::clone(&self.inner);
        let q = q.clone();
        std::thread::spawn(move || {
            let _ = tx.send(inner.lookup(&q));
        });
        rx.recv_timeout(self.timeout)
            .unwrap_or_else(|_| Err(KnowledgeError::Timeout(self.inner.name().to_string())))
    }
}

/// What happened at each source during one chain query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceOutcome {
    pub source: String,
    pub outcome: String,
}

/// Exact store, then encyclopedia, then web; first answer wins.
pub struct KnowledgeChain {
    sources: Vec<Box<dyn KnowledgeSource>>,
}

impl KnowledgeChain {
    /// Builds the chain; the argument order is the query order.
    pub fn new(
        exact: Box<dyn KnowledgeSource>,
        encyclopedia: Box<dyn KnowledgeSource>,
        web: Box<dyn KnowledgeSource>,
    ) -> Self {
        Self {
            sources: vec![exact, encyclopedia, web],
        }
    }

    pub fn kinds(&self) -> Vec<SourceKind> {
        self.sources.iter().map(|s| s.kind()).collect()
    }

    pub fn ask(&self, q: &KnowledgeQuery) -> (Option<KnowledgeAnswer>, Vec<SourceOutcome>) {
        let mut log = Vec::new();
        for s in &self.sources {
            match s.lookup(q) {
                Ok(Some(a)) => {
                    log.push(SourceOutcome {
                        source: s.name().to_string(),
                        outcome: format!("answered {}", a.id),
                    });
                    return (Some(a), log);
                }
                Ok(None) => log.push(SourceOutcome {
                    source: s.name().to_string(),
                    outcome: "miss".into(),
                }),
                Err(e) => {
                    log::warn!("knowledge source {} failed: {e}", s.name());
                    log.push(SourceOutcome {
                        source: s.name().to_string(),
                        outcome: format!("error: {e}"),
                    });
                }
            }
        }
        (None, log)
    }
}

/// Turns a question into a compact lookup phrase: drops the wh-lead and
/// rewrites possessives, so "What is Mexico City's population?" becomes
/// "population of mexico city".
pub fn normalize_query(text: &str) -> String {
    static LEAD: LazyLock<Regex> = LazyLock::new(|| {
        Regex::new(r"^(?:(?:okay|so|well|um|hey)\s+)*(?:what|who|where|when|which|how)(?:'s|\s+is|\s+are|\s+was|\s+were|\s+does|\s+do|\s+did)?\s+(?:the\s+)?")
            .expect("static regex")
    });
    static POSSESSIVE: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"^(.+?)'s\s+(.+)$").expect("static regex"));
    let lowered: String = text
        .to_lowercase()
        .replace('’', "'")
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' || c == '.' { c } else { ' ' })
        .collect();
    let lowered = lowered.trim_end_matches('.').split_whitespace().collect::<Vec<_>>().join(" ");
    let stripped = LEAD.replace(&lowered, "").to_string();
    match POSSESSIVE.captures(&stripped) {
        Some(c) => format!("{} of {}", &c[2], &c[1]),
        None => stripped,
    }
}
