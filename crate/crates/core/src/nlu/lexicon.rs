//! Line-oriented lexicon files.
//!
//! Every file is UTF-8 with one `term<TAB>value` record per line. Blank lines
//! and lines starting with `#` are ignored. The files live together in one
//! directory so a deployment can swap the whole set by pointing at another
//! path:
//!
//! | file            | record                                                     |
//! |-----------------|------------------------------------------------------------|
//! | `stopwords.tsv` | `term` (value column optional and ignored)                 |
//! | `sentiment.tsv` | `term<TAB>weight` with weight in `[-1, 1]`                 |
//! | `gazetteer.tsv` | `surface<TAB>id<TAB>type<TAB>display[<TAB>syn1,syn2]`      |
//! | `topics.tsv`    | `keyword phrase<TAB>topic`                                 |
//! | `acts.tsv`      | `phrase<TAB>tag` (see [`PhraseTag`])                       |

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use super::EntityType;
use crate::text::tokenize;

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
}

/// Phrase categories recognized in `acts.tsv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhraseTag {
    /// Whole-utterance stop words that get a confirmation guard mid-activity.
    StopBare,
    /// Long-form stop phrases that end the session anywhere in the utterance.
    StopExplicit,
    Repeat,
    Yes,
    No,
    Greeting,
    /// Discourse fillers skipped before act rules (`oh`, `um`, `alexa`).
    Filler,
    Wh,
    Aux,
    Imperative,
    Negator,
    Menu,
    /// Words that, right after `it`, make the pronoun non-referential.
    ExpletiveNext,
}

impl PhraseTag {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "stop_bare" => Self::StopBare,
            "stop_explicit" => Self::StopExplicit,
            "repeat" => Self::Repeat,
            "yes" => Self::Yes,
            "no" => Self::No,
            "greeting" => Self::Greeting,
            "filler" => Self::Filler,
            "wh" => Self::Wh,
            "aux" => Self::Aux,
            "imperative" => Self::Imperative,
            "negator" => Self::Negator,
            "menu" => Self::Menu,
            "expletive_next" => Self::ExpletiveNext,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GazetteerEntry {
    pub id: String,
    pub entity_type: EntityType,
    pub display: String,
    pub synonyms: Vec<String>,
}

/// Surface-form index for longest-match entity lookup.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: BTreeMap<String, GazetteerEntry>,
    by_first_token: HashMap<String, Vec<(Vec<String>, String)>>,
}

impl Gazetteer {
    pub fn get(&self, id: &str) -> Option<&GazetteerEntry> {
        self.entries.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &GazetteerEntry> {
        self.entries.values()
    }

    fn add(&mut self, surface: Vec<String>, entry: GazetteerEntry) {
        let id = entry.id.clone();
        self.entries.entry(id.clone()).or_insert(entry);
        let bucket = self.by_first_token.entry(surface[0].clone()).or_default();
        if !bucket.iter().any(|(s, _)| *s == surface) {
            bucket.push((surface, id));
            // longest surfaces first so the scan can stop at the first hit
            bucket.sort_by(|a, b| b.0.len().cmp(&a.0.len()));
        }
    }

    /// Left-to-right longest-match scan; returns `(start, end, id)` spans.
    pub fn scan(&self, tokens: &[String]) -> Vec<(usize, usize, String)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let hit = self.by_first_token.get(&tokens[i]).and_then(|bucket| {
                bucket
                    .iter()
                    .find(|(surface, _)| tokens.len() - i >= surface.len() && tokens[i..i + surface.len()] == surface[..])
            });
            match hit {
                Some((surface, id)) => {
                    out.push((i, i + surface.len(), id.clone()));
                    i += surface.len();
                }
                None => i += 1,
            }
        }
        out
    }
}

/// Topic keyword in declaration order; earlier topics win ties.
#[derive(Debug, Clone)]
pub struct TopicKeyword {
    pub phrase: Vec<String>,
    pub topic: String,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub(crate) stopwords: HashSet<String>,
    pub(crate) sentiment: HashMap<String, f64>,
    pub(crate) gazetteer: Gazetteer,
    pub(crate) topics: Vec<TopicKeyword>,
    pub(crate) topic_order: Vec<String>,
    pub(crate) phrases: HashMap<PhraseTag, Vec<Vec<String>>>,
}

impl Lexicon {
    /// Loads the five lexicon files from `dir`.
    pub fn load(dir: &Path) -> Result<Self, LexiconError> {
        let read = |name: &str| -> Result<String, LexiconError> {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| LexiconError::Io { path, source })
        };
        Self::from_sources(
            &read("stopwords.tsv")?,
            &read("sentiment.tsv")?,
            &read("gazetteer.tsv")?,
            &read("topics.tsv")?,
            &read("acts.tsv")?,
        )
    }

    pub fn from_sources(
        stopwords: &str,
        sentiment: &str,
        gazetteer: &str,
        topics: &str,
        acts: &str,
    ) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();

        for (_, fields) in records(stopwords) {
            lex.stopwords.insert(fields[0].to_lowercase());
        }

        for (line, fields) in records(sentiment) {
            let weight = fields
                .get(1)
                .and_then(|w| w.trim().parse::<f64>().ok())
                .filter(|w| (-1.0..=1.0).contains(w))
                .ok_or_else(|| parse_err("sentiment.tsv", line, "expected a weight in [-1, 1]"))?;
            lex.sentiment.insert(fields[0].to_lowercase(), weight);
        }

        for (line, fields) in records(gazetteer) {
            if fields.len() < 4 {
                return Err(parse_err("gazetteer.tsv", line, "expected surface, id, type, display"));
            }
            let surface = tokenize(fields[0]);
            if surface.is_empty() {
                return Err(parse_err("gazetteer.tsv", line, "empty surface form"));
            }
            let entity_type = EntityType::parse(fields[2])
                .ok_or_else(|| parse_err("gazetteer.tsv", line, &format!("unknown entity type `{}`", fields[2])))?;
            let synonyms = fields
                .get(4)
                .map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
                .unwrap_or_default();
            lex.gazetteer.add(
                surface,
                GazetteerEntry {
                    id: fields[1].to_string(),
                    entity_type,
                    display: fields[3].to_string(),
                    synonyms,
                },
            );
        }

        for (line, fields) in records(topics) {
            let topic = fields
                .get(1)
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .ok_or_else(|| parse_err("topics.tsv", line, "expected keyword and topic"))?;
            if !lex.topic_order.contains(&topic) {
                lex.topic_order.push(topic.clone());
            }
            lex.topics.push(TopicKeyword {
                phrase: tokenize(fields[0]),
                topic,
            });
        }

        for (line, fields) in records(acts) {
            let tag = fields
                .get(1)
                .and_then(|t| PhraseTag::parse(t.trim()))
                .ok_or_else(|| parse_err("acts.tsv", line, "expected phrase and a known tag"))?;
            let phrase = tokenize(fields[0]);
            if !phrase.is_empty() {
                lex.phrases.entry(tag).or_default().push(phrase);
            }
        }
        // longest phrases first for prefix matching
        for list in lex.phrases.values_mut() {
            list.sort_by(|a, b| b.len().cmp(&a.len()));
        }

        Ok(lex)
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }

    pub fn phrases(&self, tag: PhraseTag) -> &[Vec<String>] {
        self.phrases.get(&tag).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Whether a single token is listed under `tag`.
    pub fn has_word(&self, tag: PhraseTag, word: &str) -> bool {
        self.phrases(tag).iter().any(|p| p.len() == 1 && p[0] == word)
    }

    /// Longest phrase under `tag` that prefixes `tokens`.
    pub fn prefix_len(&self, tag: PhraseTag, tokens: &[String]) -> Option<usize> {
        self.phrases(tag)
            .iter()
            .find(|p| crate::text::starts_with_phrase(tokens, p))
            .map(Vec::len)
    }

    pub fn sentiment_weight(&self, token: &str) -> Option<f64> {
        self.sentiment.get(token).copied()
    }

    /// All topic labels in declaration order.
    pub fn topic_labels(&self) -> &[String] {
        &self.topic_order
    }
}

fn parse_err(file: &str, line: usize, message: &str) -> LexiconError {
    LexiconError::Parse {
        file: file.to_string(),
        line,
        message: message.to_string(),
    }
}

fn records(source: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    source.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            return None;
        }
        Some((i + 1, trimmed.split('\t').collect()))
    })
}
