//! Content packs: every corpus the modules draw on, read from LTM once at
//! startup and shared read-only by all sessions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::memory::{LtmError, LtmRecord, LtmStore};
use crate::mixed::knowledge::{EncyclopediaStore, ExactFact, ExactFactStore, KnowledgeChain, WebAnswer, WebAnswerStore};
use crate::mixed::opinions::OpinionEntry;
use crate::mixed::retrieval::{Bm25Index, IndexError, RetrievalConfig, TurnDocument};
use crate::nlu::Analyzer;
use crate::system::games::adventure::Adventure;
use crate::system::games::quiz::{FastMoneyPrompt, TriviaClue};
use crate::system::recursive::FactTopic;
use crate::system::sequences::{Riddle, WyrItem};
use crate::system::story::Story;
use crate::system::survey::Survey;
use crate::text::tokenize;

#[derive(Debug, thiserror::Error)]
pub enum PackError {
    #[error(transparent)]
    Ltm(#[from] LtmError),
    #[error("{namespace}/{key}: {source}")]
    Decode {
        namespace: String,
        key: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Seed { path: String, message: String },
    #[error("turn corpus: {0}")]
    Index(#[from] IndexError),
}

#[derive(Deserialize)]
struct City {
    name: String,
}

#[derive(Deserialize)]
struct Summary {
    entity: String,
    summary: String,
}

/// Namespaces holding corpora, with the payload field used as record key.
pub const CORPUS_NAMESPACES: &[(&str, &str)] = &[
    ("opinions", "entity"),
    ("stories", "id"),
    ("facts", "topic"),
    ("surveys", "id"),
    ("trivia", "id"),
    ("fast_money", "id"),
    ("cities", "name"),
    ("adventures", "id"),
    ("riddles", "id"),
    ("wyr", "id"),
    ("turn_corpus", "id"),
    ("kb_exact", "id"),
    ("kb_encyclopedia", "entity"),
    ("kb_web", "id"),
];

pub struct Packs {
    pub opinions: Vec<OpinionEntry>,
    pub stories: Vec<Story>,
    /// Stories whose overall sentiment is negative; never told.
    pub negative_stories: BTreeSet<String>,
    pub fact_topics: Vec<FactTopic>,
    pub surveys: Vec<Survey>,
    pub trivia: Vec<TriviaClue>,
    pub fast_money: Vec<FastMoneyPrompt>,
    pub cities: Vec<String>,
    pub adventures: Vec<Adventure>,
    pub riddles: Vec<Riddle>,
    pub wyr: Vec<WyrItem>,
    pub retrieval: Bm25Index,
    pub retrieval_config: RetrievalConfig,
    pub knowledge: KnowledgeChain,
    pub encyclopedia: EncyclopediaStore,
}

impl std::fmt::Debug for Packs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Packs")
            .field("opinions", &self.opinions.len())
            .field("stories", &self.stories.len())
            .field("fact_topics", &self.fact_topics.len())
            .field("surveys", &self.surveys.len())
            .field("retrieval", &self.retrieval.len())
            .finish_non_exhaustive()
    }
}

fn decode_all<T: DeserializeOwned>(store: &LtmStore, namespace: &str) -> Result<Vec<T>, PackError> {
    store
        .scan(namespace)?
        .into_iter()
        .map(|r| {
            serde_json::from_value(r.payload).map_err(|source| PackError::Decode {
                namespace: namespace.to_string(),
                key: r.key,
                source,
            })
        })
        .collect()
}

impl Packs {
    pub fn empty() -> Self {
        Self {
            opinions: Vec::new(),
            stories: Vec::new(),
            negative_stories: BTreeSet::new(),
            fact_topics: Vec::new(),
            surveys: Vec::new(),
            trivia: Vec::new(),
            fast_money: Vec::new(),
            cities: Vec::new(),
            adventures: Vec::new(),
            riddles: Vec::new(),
            wyr: Vec::new(),
            retrieval: Bm25Index::default(),
            retrieval_config: RetrievalConfig::default(),
            knowledge: KnowledgeChain::new(
                Box::new(ExactFactStore::default()),
                Box::new(EncyclopediaStore::default()),
                Box::new(WebAnswerStore::default()),
            ),
            encyclopedia: EncyclopediaStore::default(),
        }
    }

    /// Reads every corpus namespace from `store`.
    pub fn load(store: &LtmStore, analyzer: &Analyzer, retrieval_config: RetrievalConfig) -> Result<Self, PackError> {
        let mut stories: Vec<Story> = decode_all(store, "stories")?;
        stories.sort_by(|a, b| a.rank.cmp(&b.rank).then(a.id.cmp(&b.id)));
        let negative_stories = stories
            .iter()
            .filter(|s| analyzer.sentiment(&tokenize(&s.sentences.join(" "))) < 0.0)
            .map(|s| s.id.clone())
            .collect();

        let docs: Vec<TurnDocument> = decode_all(store, "turn_corpus")?;
        let an = analyzer.clone();
        let retrieval = Bm25Index::build(
            docs,
            &move |s: &str| an.content_words(s),
            retrieval_config.k1,
            retrieval_config.b,
        )?;

        let summaries: BTreeMap<String, String> = decode_all::<Summary>(store, "kb_encyclopedia")?
            .into_iter()
            .map(|s| (s.entity, s.summary))
            .collect();
        let exact: Vec<ExactFact> = decode_all(store, "kb_exact")?;
        let web: Vec<WebAnswer> = decode_all(store, "kb_web")?;

        Ok(Self {
            opinions: decode_all(store, "opinions")?,
            stories,
            negative_stories,
            fact_topics: decode_all(store, "facts")?,
            surveys: decode_all(store, "surveys")?,
            trivia: decode_all(store, "trivia")?,
            fast_money: decode_all(store, "fast_money")?,
            cities: decode_all::<City>(store, "cities")?.into_iter().map(|c| c.name).collect(),
            adventures: decode_all(store, "adventures")?,
            riddles: decode_all(store, "riddles")?,
            wyr: decode_all(store, "wyr")?,
            retrieval,
            retrieval_config,
            knowledge: KnowledgeChain::new(
                Box::new(ExactFactStore::new(exact)),
                Box::new(EncyclopediaStore::new(summaries.clone())),
                Box::new(WebAnswerStore::new(web)),
            ),
            encyclopedia: EncyclopediaStore::new(summaries),
        })
    }

    pub fn story(&self, id: &str) -> Option<&Story> {
        self.stories.iter().find(|s| s.id == id)
    }

    pub fn fact_topic(&self, topic: &str) -> Option<&FactTopic> {
        self.fact_topics.iter().find(|f| f.topic == topic)
    }

    pub fn survey(&self, id: &str) -> Option<&Survey> {
        self.surveys.iter().find(|s| s.id == id)
    }
}

/// Copies the seed files `<dir>/<namespace>.json` (each a JSON array of
/// payloads) into `store`, writing only records that changed. Returns the
/// number of records written.
pub fn seed_ltm(store: &LtmStore, dir: &Path) -> Result<usize, PackError> {
    let mut written = 0;
    for (ns, key_field) in CORPUS_NAMESPACES {
        let path = dir.join(format!("{ns}.json"));
        if !path.exists() {
            continue;
        }
        let seed_err = |message: String| PackError::Seed {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(&path).map_err(|e| seed_err(e.to_string()))?;
        let items: Vec<Value> = serde_json::from_str(&text).map_err(|e| seed_err(e.to_string()))?;
        for item in items {
            let key = item
                .get(*key_field)
                .and_then(Value::as_str)
                .ok_or_else(|| seed_err(format!("record without string `{key_field}`")))?
                .to_string();
            if store.get(ns, &key)?.is_some_and(|r| r.payload == item) {
                continue;
            }
            store.put(&LtmRecord::new(*ns, key, item))?;
            written += 1;
        }
    }
    Ok(written)
}
