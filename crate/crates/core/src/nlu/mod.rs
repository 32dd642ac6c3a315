//! Shallow utterance analysis over an ASR n-best list.
//!
//! The analyzer produces tokens, content words, a dialogue act from a rule
//! cascade, a lexicon sentiment score, gazetteer entities, a topic label and
//! the ASR clarification signal. Coreference runs as a second pass against
//! session history (see [`coref`]).

mod act;
pub mod coref;
pub mod lexicon;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use act::StopKind;
pub use lexicon::{Gazetteer, GazetteerEntry, Lexicon, LexiconError, PhraseTag};

use crate::text::{split_sentences, tokenize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NluError {
    #[error("ASR input has no hypotheses")]
    EmptyInput,
    #[error("hypothesis {index} has score {score} outside [0, 1]")]
    ScoreOutOfRange { index: usize, score: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsrHypothesis {
    pub text: String,
    pub score: f64,
}

/// Ranked ASR hypotheses for one user turn; never empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAsrInput")]
pub struct AsrInput {
    hypotheses: Vec<AsrHypothesis>,
}

#[derive(Deserialize)]
struct RawAsrInput {
    hypotheses: Vec<AsrHypothesis>,
}

impl TryFrom<RawAsrInput> for AsrInput {
    type Error = NluError;

    fn try_from(raw: RawAsrInput) -> Result<Self, Self::Error> {
        AsrInput::new(raw.hypotheses)
    }
}

impl AsrInput {
    pub fn new(hypotheses: Vec<AsrHypothesis>) -> Result<Self, NluError> {
        if hypotheses.is_empty() {
            return Err(NluError::EmptyInput);
        }
        for (index, h) in hypotheses.iter().enumerate() {
            if !(0.0..=1.0).contains(&h.score) || h.score.is_nan() {
                return Err(NluError::ScoreOutOfRange { index, score: h.score });
            }
        }
        Ok(Self { hypotheses })
    }

    /// A single fully-confident hypothesis; typed input takes this path.
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            hypotheses: vec![AsrHypothesis {
                text: text.into(),
                score: 1.0,
            }],
        }
    }

    pub fn hypotheses(&self) -> &[AsrHypothesis] {
        &self.hypotheses
    }

    pub fn top(&self) -> &AsrHypothesis {
        &self.hypotheses[0]
    }
}

/// Mean hypothesis score and the resulting clarification decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsrConfidence {
    pub mean: f64,
    pub needs_clarification: bool,
}

/// Arithmetic mean of the hypothesis scores; flags clarification below
/// `threshold`.
pub fn average_asr_confidence(hypotheses: &[AsrHypothesis], threshold: f64) -> Result<AsrConfidence, NluError> {
    if hypotheses.is_empty() {
        return Err(NluError::EmptyInput);
    }
    let mean = hypotheses.iter().map(|h| h.score).sum::<f64>() / hypotheses.len() as f64;
    let mean = mean.clamp(0.0, 1.0);
    Ok(AsrConfidence {
        mean,
        needs_clarification: mean < threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DialogueAct {
    Question,
    Statement,
    Command,
    YesAnswer,
    NoAnswer,
    StopRequest,
    RepeatRequest,
    Greeting,
    Other,
}

impl DialogueAct {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "question" => Self::Question,
            "statement" => Self::Statement,
            "command" => Self::Command,
            "yes_answer" | "yes" => Self::YesAnswer,
            "no_answer" | "no" => Self::NoAnswer,
            "stop_request" => Self::StopRequest,
            "repeat_request" => Self::RepeatRequest,
            "greeting" => Self::Greeting,
            "other" => Self::Other,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityType {
    Person,
    Place,
    MediaTitle,
    Concept,
    Other,
}

impl EntityType {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim() {
            "person" => Self::Person,
            "place" => Self::Place,
            "media_title" => Self::MediaTitle,
            "concept" => Self::Concept,
            "other" => Self::Other,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub canonical_id: String,
    pub entity_type: EntityType,
    /// Token range within the tokens of hypothesis `hypothesis`.
    pub span: (usize, usize),
    pub hypothesis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedReference {
    pub pronoun: String,
    pub canonical_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceAnalysis {
    pub primary_text: String,
    pub all_texts: Vec<String>,
    pub tokens: Vec<String>,
    pub content_words: Vec<String>,
    pub dialogue_act: DialogueAct,
    pub stop_kind: Option<StopKind>,
    pub menu_request: bool,
    pub sentiment: f64,
    pub entities: Vec<EntityMention>,
    pub topic: Option<String>,
    pub asr_mean: f64,
    pub needs_clarification: bool,
    pub unresolved_reference: bool,
    pub resolved_references: Vec<ResolvedReference>,
}

impl UtteranceAnalysis {
    /// Token lists for every hypothesis, top hypothesis first.
    pub fn hypothesis_tokens(&self) -> Vec<Vec<String>> {
        self.all_texts.iter().map(|t| tokenize(t)).collect()
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|e| e.canonical_id.as_str())
    }

    pub fn has_entity(&self, id: &str) -> bool {
        self.entities.iter().any(|e| e.canonical_id == id)
    }

    pub fn is(&self, act: DialogueAct) -> bool {
        self.dialogue_act == act
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NluConfig {
    pub clarification_threshold: f64,
    /// History entries scanned for pronoun antecedents, newest first.
    pub coref_window: usize,
}

impl Default for NluConfig {
    fn default() -> Self {
        Self {
            clarification_threshold: 0.40,
            coref_window: 4,
        }
    }
}

/// Stateless analyzer over a shared lexicon.
#[derive(Debug, Clone)]
pub struct Analyzer {
    lexicon: Arc<Lexicon>,
    config: NluConfig,
}

impl Analyzer {
    pub fn new(lexicon: Arc<Lexicon>, config: NluConfig) -> Self {
        Self { lexicon, config }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn config(&self) -> &NluConfig {
        &self.config
    }

    /// Full analysis of a user turn. Keyword-bearing fields that feed
    /// expectation matching keep every hypothesis in `all_texts`; everything
    /// else is derived from the top hypothesis.
    pub fn analyze(&self, input: &AsrInput) -> UtteranceAnalysis {
        let conf = average_asr_confidence(input.hypotheses(), self.config.clarification_threshold)
            .expect("AsrInput is non-empty by construction");
        let primary = input.top().text.clone();
        let all_texts: Vec<String> = input.hypotheses().iter().map(|h| h.text.clone()).collect();
        let tokens = tokenize(&primary);
        let content_words = self.content_words_of(&tokens);

        let last_sentence = split_sentences(&primary).last().copied().unwrap_or("").to_string();
        let (dialogue_act, stop_kind) = act::classify(&self.lexicon, &tokens, &last_sentence);
        let menu_request = self
            .lexicon
            .phrases(PhraseTag::Menu)
            .iter()
            .any(|p| crate::text::contains_phrase(&tokens, p));

        let mut entities = Vec::new();
        for (h, text) in all_texts.iter().enumerate() {
            for mention in self.entities_in_tokens(&tokenize(text), h) {
                if !entities.iter().any(|e: &EntityMention| e.canonical_id == mention.canonical_id) {
                    entities.push(mention);
                }
            }
        }

        UtteranceAnalysis {
            sentiment: self.sentiment(&tokens),
            topic: self.topic(&tokens),
            primary_text: primary,
            all_texts,
            tokens,
            content_words,
            dialogue_act,
            stop_kind,
            menu_request,
            entities,
            asr_mean: conf.mean,
            needs_clarification: conf.needs_clarification,
            unresolved_reference: false,
            resolved_references: Vec::new(),
        }
    }

    /// Convenience for typed text and for analysing agent utterances.
    pub fn analyze_text(&self, text: &str) -> UtteranceAnalysis {
        self.analyze(&AsrInput::text(text))
    }

    pub fn content_words_of(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .filter(|t| !self.lexicon.is_stopword(t) && t.as_str() != "'s")
            .cloned()
            .collect()
    }

    pub fn content_words(&self, text: &str) -> Vec<String> {
        self.content_words_of(&tokenize(text))
    }

    pub fn entities_in_tokens(&self, tokens: &[String], hypothesis: usize) -> Vec<EntityMention> {
        self.lexicon
            .gazetteer()
            .scan(tokens)
            .into_iter()
            .filter_map(|(start, end, id)| {
                let entry = self.lexicon.gazetteer().get(&id)?;
                Some(EntityMention {
                    surface: entry.display.clone(),
                    canonical_id: id,
                    entity_type: entry.entity_type,
                    span: (start, end),
                    hypothesis,
                })
            })
            .collect()
    }

    pub fn entities(&self, text: &str) -> Vec<EntityMention> {
        self.entities_in_tokens(&tokenize(text), 0)
    }

    /// Mean of signed lexicon weights over sentiment-bearing tokens, with
    /// a negator in the two preceding tokens flipping the sign.
    pub fn sentiment(&self, tokens: &[String]) -> f64 {
        let mut sum = 0.0;
        let mut hits = 0usize;
        for (i, tok) in tokens.iter().enumerate() {
            if let Some(w) = self.lexicon.sentiment_weight(tok) {
                let negated = tokens[i.saturating_sub(2)..i]
                    .iter()
                    .any(|t| self.lexicon.has_word(PhraseTag::Negator, t));
                sum += if negated { -w } else { w };
                hits += 1;
            }
        }
        if hits == 0 {
            0.0
        } else {
            (sum / hits as f64).clamp(-1.0, 1.0)
        }
    }

    /// Topic with the most keyword hits; ties go to the earliest declared
    /// topic.
    pub fn topic(&self, tokens: &[String]) -> Option<String> {
        let mut hits: BTreeMap<&str, usize> = BTreeMap::new();
        for kw in &self.lexicon.topics {
            if crate::text::contains_phrase(tokens, &kw.phrase) {
                *hits.entry(kw.topic.as_str()).or_default() += 1;
            }
        }
        let best = hits.values().copied().max()?;
        self.lexicon
            .topic_order
            .iter()
            .find(|t| hits.get(t.as_str()) == Some(&best))
            .cloned()
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn lexicon() -> Arc<Lexicon> {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/nlu");
        Arc::new(Lexicon::load(&dir).expect("bundled lexicon loads"))
    }

    pub fn analyzer() -> Analyzer {
        Analyzer::new(lexicon(), NluConfig::default())
    }
}
