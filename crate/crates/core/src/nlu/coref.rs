//! Pronoun resolution against recent session history.
//!
//! Third-person pronouns are mapped to the most recent compatible entity
//! mention: `it` to non-person entities, `he`/`she` to persons, `they` to
//! anything. Mentions earlier in the same utterance are the most recent;
//! after that, history entries are scanned newest first within the
//! configured window, last mention in each entry first.

use std::collections::BTreeSet;

use super::{Analyzer, EntityMention, EntityType, PhraseTag, ResolvedReference, UtteranceAnalysis};
use crate::memory::HistoryEntry;
use crate::text::{tokenize, tokens_with_spans};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Compat {
    NonPerson,
    Person,
    Any,
}

impl Compat {
    fn accepts(self, t: EntityType) -> bool {
        match self {
            Compat::NonPerson => t != EntityType::Person,
            Compat::Person => t == EntityType::Person,
            Compat::Any => true,
        }
    }
}

struct Pronoun {
    compat: Compat,
    possessive: bool,
}

fn classify(word: &str, next: Option<&str>, analyzer: &Analyzer) -> Option<Pronoun> {
    let lex = analyzer.lexicon();
    let p = |compat, possessive| Some(Pronoun { compat, possessive });
    match word {
        "it" => {
            if next.is_some_and(|n| lex.has_word(PhraseTag::ExpletiveNext, n)) {
                None
            } else {
                p(Compat::NonPerson, false)
            }
        }
        "its" => p(Compat::NonPerson, true),
        "he" | "him" | "she" => p(Compat::Person, false),
        "his" => p(Compat::Person, true),
        "her" => {
            let possessive = next.is_some_and(|n| !lex.is_stopword(n));
            p(Compat::Person, possessive)
        }
        "they" | "them" => p(Compat::Any, false),
        "their" => p(Compat::Any, true),
        _ => None,
    }
}

impl Analyzer {
    /// Rewrites pronouns in `primary_text` with the canonical surface of their
    /// antecedent. `all_texts` keeps the original hypotheses. When a pronoun
    /// has no compatible antecedent the analysis comes back unchanged with
    /// `unresolved_reference` set.
    pub fn resolve_coreference(&self, analysis: &UtteranceAnalysis, history: &[HistoryEntry]) -> UtteranceAnalysis {
        let text = &analysis.primary_text;
        let toks = tokens_with_spans(text);

        let window_start = history.len().saturating_sub(self.config().coref_window);
        let mut prior: Vec<EntityMention> = Vec::new();
        for entry in history[window_start..].iter().rev() {
            if let Some(a) = &entry.analysis {
                let mut ents = a.entities.clone();
                ents.sort_by(|x, y| (y.hypothesis == 0).cmp(&(x.hypothesis == 0)).then(y.span.0.cmp(&x.span.0)));
                prior.extend(ents);
            }
        }

        let mut replacements: Vec<(std::ops::Range<usize>, String)> = Vec::new();
        let mut resolved = Vec::new();
        let mut unresolved = false;

        for (i, tok) in toks.iter().enumerate() {
            let next = toks.get(i + 1).map(|t| t.text.as_str());
            let Some(pronoun) = classify(&tok.text, next, self) else {
                continue;
            };
            let in_utterance = analysis
                .entities
                .iter()
                .filter(|e| e.hypothesis == 0 && e.span.1 <= i)
                .rev();
            let antecedent = in_utterance
                .chain(prior.iter())
                .find(|e| pronoun.compat.accepts(e.entity_type));
            match antecedent {
                Some(e) => {
                    let mut surface = e.surface.clone();
                    if pronoun.possessive {
                        surface.push_str("'s");
                    }
                    replacements.push((tok.span.clone(), surface));
                    resolved.push(ResolvedReference {
                        pronoun: tok.text.clone(),
                        canonical_id: e.canonical_id.clone(),
                    });
                }
                None => unresolved = true,
            }
        }

        let mut out = analysis.clone();
        out.unresolved_reference = unresolved;
        if replacements.is_empty() {
            return out;
        }

        let mut rewritten = text.clone();
        for (span, surface) in replacements.into_iter().rev() {
            rewritten.replace_range(span, &surface);
        }

        let allowed: BTreeSet<&str> = analysis
            .entities
            .iter()
            .map(|e| e.canonical_id.as_str())
            .chain(resolved.iter().map(|r| r.canonical_id.as_str()))
            .collect();
        let tokens = tokenize(&rewritten);
        let mut entities: Vec<EntityMention> = self
            .entities_in_tokens(&tokens, 0)
            .into_iter()
            .filter(|e| allowed.contains(e.canonical_id.as_str()))
            .collect();
        for e in analysis.entities.iter().filter(|e| e.hypothesis > 0) {
            if !entities.iter().any(|x| x.canonical_id == e.canonical_id) {
                entities.push(e.clone());
            }
        }

        out.content_words = self.content_words_of(&tokens);
        out.topic = self.topic(&tokens).or(out.topic);
        out.tokens = tokens;
        out.entities = entities;
        out.primary_text = rewritten;
        out.resolved_references = resolved;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::analyzer;
    use crate::memory::{HistoryEntry, Speaker};

    fn entry(speaker: Speaker, text: &str) -> HistoryEntry {
        let an = analyzer();
        HistoryEntry {
            speaker,
            text: text.into(),
            analysis: Some(an.analyze_text(text)),
            origin: None,
            marked: None,
        }
    }

    #[test]
    fn its_population_resolves_to_mexico_city() {
        let an = analyzer();
        let history = vec![
            entry(Speaker::User, "What is the capitol city of Mexico."),
            entry(Speaker::Agent, "The capitol city of Mexico is Mexico City."),
        ];
        let a = an.analyze_text("What is it's population?");
        let r = an.resolve_coreference(&a, &history);
        assert_eq!(r.primary_text, "What is Mexico City's population?");
        assert_eq!(r.all_texts, vec!["What is it's population?".to_string()]);
        assert!(r.has_entity("mexico_city"));
        assert!(!r.unresolved_reference);
    }

    #[test]
    fn no_antecedent_leaves_analysis_unchanged() {
        let an = analyzer();
        let a = an.analyze_text("i love it");
        let r = an.resolve_coreference(&a, &[]);
        assert!(r.unresolved_reference);
        assert_eq!(r.primary_text, a.primary_text);
        assert_eq!(r.tokens, a.tokens);
    }

    /// Independent recency scan: walk the scripted history backwards and take
    /// the first person mention.
    fn recency_oracle(history: &[HistoryEntry]) -> Option<String> {
        history.iter().rev().find_map(|h| {
            h.analysis.as_ref().and_then(|a| {
                a.entities
                    .iter()
                    .rev()
                    .find(|e| e.entity_type == crate::nlu::EntityType::Person)
                    .map(|e| e.surface.clone())
            })
        })
    }

    #[test]
    fn he_resolves_to_most_recent_person() {
        let an = analyzer();
        let history = vec![
            entry(Speaker::User, "who was the sixteenth president"),
            entry(Speaker::Agent, "That was Abraham Lincoln."),
        ];
        let expected = recency_oracle(&history).unwrap();
        assert_eq!(expected, "Abraham Lincoln");
        let r = an.resolve_coreference(&an.analyze_text("is he tall?"), &history);
        assert_eq!(r.primary_text, format!("is {expected} tall?"));
    }

    #[test]
    fn it_skips_person_antecedents() {
        let an = analyzer();
        let history = vec![
            entry(Speaker::Agent, "I loved The Terminator."),
            entry(Speaker::User, "Abraham Lincoln was tall"),
        ];
        let r = an.resolve_coreference(&an.analyze_text("did you like it"), &history);
        assert_eq!(r.primary_text, "did you like The Terminator");
    }

    #[test]
    fn expletive_it_is_left_alone() {
        let an = analyzer();
        let history = vec![entry(Speaker::Agent, "The population of Mexico City is 8.8 million.")];
        let a = an.analyze_text("Okay, how is it that you are smart?");
        let r = an.resolve_coreference(&a, &history);
        assert_eq!(r.primary_text, a.primary_text);
        assert!(!r.unresolved_reference);
    }

    #[test]
    fn window_limits_lookback() {
        let an = analyzer();
        let mut history = vec![entry(Speaker::Agent, "The capitol city of Mexico is Mexico City.")];
        for _ in 0..4 {
            history.push(entry(Speaker::User, "hmm okay"));
        }
        let r = an.resolve_coreference(&an.analyze_text("what is it"), &history);
        assert!(r.unresolved_reference);
    }
}
