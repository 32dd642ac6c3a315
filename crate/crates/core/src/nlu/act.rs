//! Rule cascade for dialogue acts.
//!
//! Order: stop phrases, repeat phrases, yes/no lexicon, greeting, wh-word or
//! auxiliary inversion, imperative verb-initial, then `Statement`. The last
//! sentence of the utterance carries the act ("Just a guess. Tell me a
//! story." is a command).

use serde::{Deserialize, Serialize};

use super::{DialogueAct, Lexicon, PhraseTag};
use crate::text::{contains_phrase, tokenize};

/// How a stop request was phrased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    /// A short "stop"/"cancel" that ASR often hallucinates.
    Bare,
    /// A long-form phrase such as "i'm done talking".
    Explicit,
}

fn strip_fillers<'a>(lex: &Lexicon, mut tokens: &'a [String]) -> &'a [String] {
    while let Some(n) = lex.prefix_len(PhraseTag::Filler, tokens) {
        tokens = &tokens[n..];
    }
    tokens
}

fn is_question_start(lex: &Lexicon, tokens: &[String]) -> bool {
    tokens
        .first()
        .is_some_and(|t| lex.has_word(PhraseTag::Wh, t) || lex.has_word(PhraseTag::Aux, t))
}

fn is_imperative_start(lex: &Lexicon, tokens: &[String]) -> bool {
    tokens.first().is_some_and(|t| lex.has_word(PhraseTag::Imperative, t))
}

pub(super) fn classify(lex: &Lexicon, tokens: &[String], last_sentence: &str) -> (DialogueAct, Option<StopKind>) {
    if tokens.is_empty() {
        return (DialogueAct::Other, None);
    }

    if lex.phrases(PhraseTag::StopExplicit).iter().any(|p| contains_phrase(tokens, p)) {
        return (DialogueAct::StopRequest, Some(StopKind::Explicit));
    }
    let core = strip_fillers(lex, tokens);
    if lex.phrases(PhraseTag::StopBare).iter().any(|p| p[..] == core[..]) {
        return (DialogueAct::StopRequest, Some(StopKind::Bare));
    }

    if lex.phrases(PhraseTag::Repeat).iter().any(|p| contains_phrase(tokens, p)) {
        return (DialogueAct::RepeatRequest, None);
    }

    let sentence_tokens = tokenize(last_sentence);
    let mut clause = strip_fillers(lex, &sentence_tokens);
    if clause.is_empty() {
        clause = core;
    }

    for (tag, act) in [(PhraseTag::Yes, DialogueAct::YesAnswer), (PhraseTag::No, DialogueAct::NoAnswer)] {
        if let Some(n) = lex.prefix_len(tag, clause) {
            let rest = strip_fillers(lex, &clause[n..]);
            if rest.is_empty() || !(is_question_start(lex, rest) || is_imperative_start(lex, rest)) {
                return (act, None);
            }
            clause = rest;
            break;
        }
    }

    if let Some(n) = lex.prefix_len(PhraseTag::Greeting, clause) {
        if !is_question_start(lex, &clause[n..]) {
            return (DialogueAct::Greeting, None);
        }
    }

    if is_question_start(lex, clause) || last_sentence.trim_end().ends_with('?') {
        return (DialogueAct::Question, None);
    }
    if is_imperative_start(lex, clause) {
        return (DialogueAct::Command, None);
    }
    (DialogueAct::Statement, None)
}
