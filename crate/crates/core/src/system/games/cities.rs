//! The city name game: each city must start with the last letter of the
//! previous one.

use serde::{Deserialize, Serialize};

use super::super::{declines, exit, ActivityState};
use super::GameState;
use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use crate::context::ModuleContext;
use crate::text::{contains_phrase, fold, tokenize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CityState {
    pub last: String,
    pub used: Vec<String>,
}

fn first_letter(city: &str) -> Option<char> {
    fold(city).chars().find(|c| c.is_alphabetic())
}

fn last_letter(city: &str) -> Option<char> {
    fold(city).chars().rev().find(|c| c.is_alphabetic())
}

fn same_city(a: &str, b: &str) -> bool {
    fold(a) == fold(b)
}

/// An unused city from `cities` starting with the final letter of
/// `last_city`, in list order. `None` means the agent concedes.
pub fn city_reply<'a>(last_city: &str, used: &[String], cities: &'a [String]) -> Option<&'a str> {
    let want = last_letter(last_city)?;
    cities
        .iter()
        .find(|c| first_letter(c) == Some(want) && !used.iter().any(|u| same_city(u, c)))
        .map(String::as_str)
}

/// Longest known city named anywhere in the user's turn.
fn city_in(ctx: &ModuleContext) -> Option<String> {
    let hyps: Vec<Vec<String>> = std::iter::once(&ctx.analysis.primary_text)
        .chain(ctx.analysis.all_texts.iter())
        .map(|t| tokenize(&fold(t)))
        .collect();
    ctx.packs
        .cities
        .iter()
        .filter(|c| {
            let p = tokenize(&fold(c));
            hyps.iter().any(|h| contains_phrase(h, &p))
        })
        .max_by_key(|c| c.len())
        .cloned()
}

fn upper(c: char) -> String {
    c.to_uppercase().collect()
}

fn ask(letter: char) -> String {
    format!("Can you name a city that starts with {}?", upper(letter))
}

fn continuing(state: CityState, text: String, base: f64) -> ResponseCandidate {
    ResponseCandidate::new(ModuleId::CityNames, text, base).update(StateUpdate::SetActivity {
        activity: Some(ActivityState::Game(GameState::CityNames(state))),
    })
}

pub fn start(ctx: &ModuleContext, base: f64) -> Option<ResponseCandidate> {
    let first = ctx.packs.cities.first()?.clone();
    let letter = last_letter(&first)?;
    let text = format!(
        "Let's play the city name game. I'll name a city, and you name one that starts with its last letter. I'll go first: {first}. {}",
        ask(letter)
    );
    let state = CityState {
        last: first.clone(),
        used: vec![first],
    };
    Some(
        continuing(state, text, base)
            .topic("games")
            .update(StateUpdate::MarkTopicExplored { topic: "games".into() }),
    )
}

pub fn step(ctx: &ModuleContext, state: &CityState) -> Vec<ResponseCandidate> {
    if declines(ctx.analysis) {
        return vec![exit(ModuleId::CityNames, "Okay, good game. What would you like to talk about?", 1.0)];
    }
    let Some(want) = last_letter(&state.last) else {
        return vec![exit(ModuleId::CityNames, "Let's play something else. What would you like to do?", 1.0)];
    };
    let Some(city) = city_in(ctx) else {
        return vec![continuing(state.clone(), format!("I don't know that city. {}", ask(want)), 0.9)];
    };
    if state.used.iter().any(|u| same_city(u, &city)) {
        return vec![continuing(
            state.clone(),
            format!("We already said that one. {}", ask(want)),
            1.0,
        )];
    }
    if first_letter(&city) != Some(want) {
        return vec![continuing(
            state.clone(),
            format!("{city} doesn't start with {}. {}", upper(want), ask(want)),
            1.0,
        )];
    }
    let mut used = state.used.clone();
    used.push(city.clone());
    match city_reply(&city, &used, &ctx.packs.cities) {
        None => {
            let l = last_letter(&city).map(upper).unwrap_or_default();
            vec![exit(
                ModuleId::CityNames,
                &format!("{city}, nice one. I can't think of a city that starts with {l}. You win!"),
                1.0,
            )]
        }
        Some(reply) => {
            used.push(reply.to_string());
            let next = last_letter(reply).unwrap_or('a');
            let text = format!("{city}, nice one. I'll say {reply}. {}", ask(next));
            vec![continuing(
                CityState {
                    last: reply.to_string(),
                    used,
                },
                text,
                1.0,
            )]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cities() -> Vec<String> {
        ["Boston", "Nairobi", "Nashville", "Istanbul", "Lima"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn reply_starts_with_last_letter() {
        let c = cities();
        let r = city_reply("Boston", &["Boston".to_string()], &c).unwrap();
        assert!(r.starts_with('N'));
    }

    #[test]
    fn exhausted_letter_concedes() {
        let c = cities();
        let used: Vec<String> = vec!["Nairobi".into(), "Nashville".into()];
        assert_eq!(city_reply("Boston", &used, &c), None);
    }

    #[test]
    fn diacritics_fold() {
        let c = vec!["Ávila".to_string()];
        assert_eq!(city_reply("Bogotá", &[], &c), Some("Ávila"));
    }
}
