//! The agent's opinion profile and the responder built on it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use crate::nlu::{DialogueAct, UtteranceAnalysis};
use crate::text::{capitalize_first, contains_phrase, stable_hash, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Love,
    Like,
    Dislike,
    Hate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opinion {
    pub entity: String,
    pub display: String,
    pub category: String,
    pub polarity: Polarity,
    pub statement: String,
    pub justification: String,
}

/// One way the agent might feel about an entity, as stored in the pack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionVariant {
    pub polarity: Polarity,
    pub statement: String,
    pub justification: String,
}

/// Pack record: every stance the agent could take on one entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionEntry {
    pub entity: String,
    pub display: String,
    pub category: String,
    pub variants: Vec<OpinionVariant>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OpinionProfile {
    pub opinions: BTreeMap<String, Opinion>,
    /// Category to entity id.
    pub favorites: BTreeMap<String, String>,
    pub seeded: bool,
}

impl OpinionProfile {
    /// Draws one stance per entity and one favorite per category. The draw
    /// depends only on the pack, the user id and the seed.
    pub fn seed(pack: &[OpinionEntry], user_id: Option<&str>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(user_id.unwrap_or("")) ^ seed);
        let mut entries: Vec<&OpinionEntry> = pack.iter().filter(|e| !e.variants.is_empty()).collect();
        entries.sort_by(|a, b| a.entity.cmp(&b.entity));

        let mut opinions = BTreeMap::new();
        for e in entries {
            let v = &e.variants[rng.gen_range(0..e.variants.len())];
            opinions.insert(
                e.entity.clone(),
                Opinion {
                    entity: e.entity.clone(),
                    display: e.display.clone(),
                    category: e.category.clone(),
                    polarity: v.polarity,
                    statement: v.statement.clone(),
                    justification: v.justification.clone(),
                },
            );
        }

        let mut by_category: BTreeMap<&str, Vec<&Opinion>> = BTreeMap::new();
        for o in opinions.values() {
            by_category.entry(o.category.as_str()).or_default().push(o);
        }
        let mut favorites = BTreeMap::new();
        for (category, ops) in by_category {
            let loved: Vec<&&Opinion> = ops.iter().filter(|o| o.polarity == Polarity::Love).collect();
            let liked: Vec<&&Opinion> = ops.iter().filter(|o| o.polarity == Polarity::Like).collect();
            let pool = if loved.is_empty() { liked } else { loved };
            if !pool.is_empty() {
                let pick = pool[rng.gen_range(0..pool.len())];
                favorites.insert(category.to_string(), pick.entity.clone());
            }
        }

        Self {
            opinions,
            favorites,
            seeded: true,
        }
    }

    pub fn get(&self, entity: &str) -> Option<&Opinion> {
        self.opinions.get(entity)
    }

    pub fn favorite(&self, category: &str) -> Option<&Opinion> {
        self.favorites.get(category).and_then(|e| self.opinions.get(e))
    }
}

/// Words that name an opinion category.
const CATEGORY_WORDS: &[(&str, &str)] = &[
    ("video game", "video_game"),
    ("game", "video_game"),
    ("film", "movie"),
    ("films", "movie"),
    ("movie", "movie"),
    ("movies", "movie"),
    ("color", "color"),
    ("colour", "color"),
    ("food", "food"),
    ("snack", "food"),
    ("book", "book"),
    ("novel", "book"),
    ("animal", "animal"),
    ("pet", "animal"),
    ("song", "music"),
    ("band", "music"),
    ("singer", "music"),
    ("sport", "sport"),
    ("season", "season"),
];

const FEELING_WORDS: &[&str] = &["like", "love", "hate", "dislike", "enjoy", "prefer"];

const SOLICITATIONS: &[&str] = &[
    "what do you think of",
    "what do you think about",
    "how do you feel about",
    "what's your opinion of",
    "what's your opinion on",
    "do you like",
    "do you love",
    "do you hate",
    "what about",
];

fn category_in(tokens: &[String]) -> Option<&'static str> {
    CATEGORY_WORDS
        .iter()
        .find(|(w, _)| contains_phrase(tokens, &tokenize(w)))
        .map(|(_, c)| *c)
}

fn user_name_in(tokens: &[String], raw: &str) -> Option<String> {
    for lead in ["my name is", "call me", "i'm called", "i am called"] {
        let lead = tokenize(lead);
        if let Some(pos) = crate::text::find_phrase(tokens, &lead) {
            let name = tokens.get(pos + lead.len())?;
            // keep the user's own capitalization when we can find it
            let shown = raw
                .split(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-')
                .find(|w| w.eq_ignore_ascii_case(name))
                .map(str::to_string)
                .unwrap_or_else(|| name.clone());
            return Some(capitalize_first(&shown));
        }
    }
    None
}

/// Answers opinion solicitations from the profile. Returns `None` when the
/// turn is not about an opinion the agent holds.
pub fn opinion_respond(analysis: &UtteranceAnalysis, profile: &OpinionProfile) -> Option<ResponseCandidate> {
    let toks = &analysis.tokens;

    if let Some(name) = user_name_in(toks, &analysis.primary_text) {
        return Some(
            ResponseCandidate::new(
                ModuleId::Opinions,
                format!("Nice to meet you, {name}! What would you like to talk about?"),
                0.9,
            )
            .update(StateUpdate::SetUserName { name }),
        );
    }

    let asks_agent = toks.iter().any(|t| t == "your" || t == "you") || analysis.dialogue_act == DialogueAct::Question;
    if asks_agent && toks.iter().any(|t| t == "favorite" || t == "favourite") {
        if let Some(o) = category_in(toks).and_then(|c| profile.favorite(c)) {
            return Some(ResponseCandidate::new(ModuleId::Opinions, o.statement.clone(), 0.9).topic(o.category.clone()));
        }
    }

    let held = analysis.entities.iter().find_map(|e| profile.get(&e.canonical_id))?;

    let why = toks.first().is_some_and(|t| t == "why") && toks.iter().any(|t| FEELING_WORDS.contains(&t.as_str()));
    if why {
        return Some(ResponseCandidate::new(ModuleId::Opinions, held.justification.clone(), 0.9).topic(held.category.clone()));
    }

    let solicited = SOLICITATIONS.iter().any(|s| contains_phrase(toks, &tokenize(s)));
    if solicited {
        return Some(ResponseCandidate::new(ModuleId::Opinions, held.statement.clone(), 0.9).topic(held.category.clone()));
    }

    let shares_feeling = toks.first().is_some_and(|t| t == "i")
        && toks.iter().take(4).any(|t| FEELING_WORDS.contains(&t.as_str()));
    if shares_feeling {
        return Some(
            ResponseCandidate::new(ModuleId::Opinions, held.statement.clone(), 0.85).topic(held.category.clone()),
        );
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variant(p: Polarity, s: &str) -> OpinionVariant {
        OpinionVariant {
            polarity: p,
            statement: s.into(),
            justification: format!("because {s}"),
        }
    }

    fn pack() -> Vec<OpinionEntry> {
        vec![
            OpinionEntry {
                entity: "a".into(),
                display: "A".into(),
                category: "movie".into(),
                variants: vec![variant(Polarity::Love, "a1"), variant(Polarity::Hate, "a2")],
            },
            OpinionEntry {
                entity: "b".into(),
                display: "B".into(),
                category: "movie".into(),
                variants: vec![variant(Polarity::Like, "b1"), variant(Polarity::Love, "b2")],
            },
        ]
    }

    #[test]
    fn seeding_is_reproducible() {
        let p1 = OpinionProfile::seed(&pack(), Some("u1"), 9);
        let p2 = OpinionProfile::seed(&pack(), Some("u1"), 9);
        assert_eq!(p1, p2);
        assert!(p1.seeded);
        assert_eq!(p1.opinions.len(), 2);
    }

    #[test]
    fn favorite_prefers_loved_entities() {
        for seed in 0..20 {
            let p = OpinionProfile::seed(&pack(), Some("u"), seed);
            if let Some(f) = p.favorite("movie") {
                let loved = p.opinions.values().any(|o| o.polarity == Polarity::Love);
                assert!(!loved || f.polarity == Polarity::Love);
            }
        }
    }
}
