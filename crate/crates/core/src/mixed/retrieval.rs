//! BM25 retrieval over a stimulus/response turn corpus.
//!
//! Scores use `idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1)` and the usual
//! saturating term-frequency factor with length normalization. Query terms
//! are deduplicated. Ranking ties keep corpus insertion order.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::candidate::{ModuleId, ResponseCandidate};
use crate::nlu::UtteranceAnalysis;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnDocument {
    pub id: String,
    pub stimulus: String,
    pub response: String,
    pub topic: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub k1: f64,
    pub b: f64,
    pub top_k: usize,
    /// Ceiling on retrieval base confidence.
    pub confidence_cap: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k1: 1.2,
            b: 0.75,
            top_k: 3,
            confidence_cap: 0.7,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum IndexError {
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("document `{id}` has an empty `{field}`")]
    EmptyField { id: String, field: &'static str },
}

#[derive(Debug, Clone, Default)]
pub struct Bm25Index {
    docs: Vec<TurnDocument>,
    lengths: Vec<usize>,
    postings: HashMap<String, Vec<(usize, usize)>>,
    avgdl: f64,
    k1: f64,
    b: f64,
}

impl Bm25Index {
    /// Indexes the stimulus field of each document with `terms_of`.
    pub fn build(
        docs: Vec<TurnDocument>,
        terms_of: &dyn Fn(&str) -> Vec<String>,
        k1: f64,
        b: f64,
    ) -> Result<Self, IndexError> {
        let mut seen = BTreeSet::new();
        let mut lengths = Vec::with_capacity(docs.len());
        let mut postings: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        for (i, d) in docs.iter().enumerate() {
            for (field, value) in [("id", &d.id), ("stimulus", &d.stimulus), ("response", &d.response), ("topic", &d.topic)] {
                if value.trim().is_empty() {
                    return Err(IndexError::EmptyField { id: d.id.clone(), field });
                }
            }
            if !seen.insert(d.id.clone()) {
                return Err(IndexError::DuplicateId(d.id.clone()));
            }
            let terms = terms_of(&d.stimulus);
            lengths.push(terms.len());
            let mut tf: BTreeMap<String, usize> = BTreeMap::new();
            for t in terms {
                *tf.entry(t).or_default() += 1;
            }
            for (t, n) in tf {
                postings.entry(t).or_default().push((i, n));
            }
        }
        let avgdl = if docs.is_empty() {
            0.0
        } else {
            lengths.iter().sum::<usize>() as f64 / docs.len() as f64
        };
        Ok(Self {
            docs,
            lengths,
            postings,
            avgdl,
            k1,
            b,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc(&self, i: usize) -> &TurnDocument {
        &self.docs[i]
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.docs.len() as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Top `k` documents with a positive score, best first.
    pub fn search(&self, query: &[String], topic: Option<&str>, k: usize) -> Vec<(usize, f64)> {
        let terms: BTreeSet<&String> = query.iter().collect();
        let mut scores: BTreeMap<usize, f64> = BTreeMap::new();
        for t in terms {
            let Some(list) = self.postings.get(t) else {
                continue;
            };
            let idf = self.idf(list.len());
            for &(doc, tf) in list {
                if topic.is_some_and(|tp| self.docs[doc].topic != tp) {
                    continue;
                }
                let tf = tf as f64;
                let norm = if self.avgdl > 0.0 {
                    self.lengths[doc] as f64 / self.avgdl
                } else {
                    0.0
                };
                let s = idf * tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * norm));
                *scores.entry(doc).or_default() += s;
            }
        }
        let mut ranked: Vec<(usize, f64)> = scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }
}

/// Retrieval candidates for the user turn. The topic filter applies only
/// when it leaves at least one hit.
pub fn retrieve_response(
    index: &Bm25Index,
    analysis: &UtteranceAnalysis,
    topic: Option<&str>,
    config: &RetrievalConfig,
) -> Vec<ResponseCandidate> {
    if index.is_empty() {
        return Vec::new();
    }
    let mut hits = match topic {
        Some(t) => index.search(&analysis.content_words, Some(t), config.top_k),
        None => Vec::new(),
    };
    if hits.is_empty() {
        hits = index.search(&analysis.content_words, None, config.top_k);
    }
    let (lo, hi) = hits
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, s)| (lo.min(*s), hi.max(*s)));
    hits.into_iter()
        .map(|(i, s)| {
            let norm = if hi > lo { (s - lo) / (hi - lo) } else { 1.0 };
            let d = index.doc(i);
            let mut c = ResponseCandidate::new(ModuleId::Retrieval, d.response.clone(), config.confidence_cap * norm)
                .topic(d.topic.clone());
            c.id = format!("retrieval:{}", d.id);
            c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn doc(id: &str, stimulus: &str, topic: &str) -> TurnDocument {
        TurnDocument {
            id: id.into(),
            stimulus: stimulus.into(),
            response: format!("response {id}"),
            topic: topic.into(),
        }
    }

    fn build(docs: Vec<TurnDocument>) -> Bm25Index {
        Bm25Index::build(docs, &|s| tokenize(s), 1.2, 0.75).unwrap()
    }

    #[test]
    fn single_document_is_returned() {
        let idx = build(vec![doc("only", "cats are great", "animals")]);
        let hits = idx.search(&tokenize("cats"), None, 3);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0, 0);
    }

    #[test]
    fn no_overlap_no_hits() {
        let idx = build(vec![doc("a", "cats are great", "animals")]);
        assert!(idx.search(&tokenize("weather"), None, 3).is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Bm25Index::build(vec![doc("a", "x", "t"), doc("a", "y", "t")], &|s| tokenize(s), 1.2, 0.75);
        assert_eq!(err.unwrap_err(), IndexError::DuplicateId("a".into()));
    }

    #[test]
    fn topic_filter_restricts_hits() {
        let idx = build(vec![doc("a", "i like cats", "animals"), doc("b", "i like rain", "weather")]);
        let hits = idx.search(&tokenize("like"), Some("weather"), 3);
        assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), vec![1]);
    }
}
