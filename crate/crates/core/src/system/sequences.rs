//! Two-turn sequences that loop: would-you-rather questions and riddles.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::answer::check_answer;
use super::{declines, exit, wants_more, ActivityState};
use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use crate::context::ModuleContext;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WyrItem {
    pub id: String,
    pub question: String,
    pub options: Vec<String>,
    /// Index into `options`.
    pub agent_choice: usize,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Riddle {
    pub id: String,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// The question is out; the next user turn answers it.
    Asked,
    /// The reply is out and ends by offering another.
    Reprompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceState {
    pub item_id: String,
    pub phase: Phase,
}

const ORDINALS: [&str; 4] = ["first", "second", "third", "fourth"];

fn wyr_key(id: &str) -> String {
    format!("wyr:{id}")
}

fn riddle_key(id: &str) -> String {
    format!("riddle:{id}")
}

fn ask_wyr(item: &WyrItem, base: f64) -> ResponseCandidate {
    ResponseCandidate::new(ModuleId::WouldYouRather, item.question.clone(), base)
        .topic("would_you_rather")
        .update(StateUpdate::MarkFactUsed { fact_id: wyr_key(&item.id) })
        .update(StateUpdate::SetActivity {
            activity: Some(ActivityState::WouldYouRather(SequenceState {
                item_id: item.id.clone(),
                phase: Phase::Asked,
            })),
        })
}

fn ask_riddle(r: &Riddle, base: f64) -> ResponseCandidate {
    ResponseCandidate::new(ModuleId::Riddles, format!("Here's a riddle. {}", r.question), base)
        .topic("riddles")
        .update(StateUpdate::MarkFactUsed { fact_id: riddle_key(&r.id) })
        .update(StateUpdate::SetActivity {
            activity: Some(ActivityState::Riddles(SequenceState {
                item_id: r.id.clone(),
                phase: Phase::Asked,
            })),
        })
}

pub fn start_wyr(ctx: &ModuleContext, base: f64) -> Option<ResponseCandidate> {
    let item = ctx.packs.wyr.iter().find(|w| !ctx.used(&wyr_key(&w.id)))?;
    Some(ask_wyr(item, base).update(StateUpdate::MarkTopicExplored {
        topic: "would_you_rather".into(),
    }))
}

pub fn start_riddles(ctx: &ModuleContext, base: f64) -> Option<ResponseCandidate> {
    let r = ctx.packs.riddles.iter().find(|r| !ctx.used(&riddle_key(&r.id)))?;
    Some(ask_riddle(r, base).update(StateUpdate::MarkTopicExplored { topic: "riddles".into() }))
}

/// The option sharing the most content words with the user's turn, when
/// one strictly leads.
pub fn chosen_option(ctx: &ModuleContext, options: &[String]) -> Option<usize> {
    let user: BTreeSet<&str> = ctx.analysis.content_words.iter().map(String::as_str).collect();
    let scores: Vec<usize> = options
        .iter()
        .map(|o| {
            let words: BTreeSet<String> = ctx.analyzer.content_words(o).into_iter().collect();
            words.iter().filter(|w| user.contains(w.as_str())).count()
        })
        .collect();
    let best = *scores.iter().max()?;
    if best == 0 || scores.iter().filter(|s| **s == best).count() > 1 {
        return None;
    }
    scores.iter().position(|s| *s == best)
}

fn reprompt(module: ModuleId, id: &str, text: String) -> ResponseCandidate {
    let state = SequenceState {
        item_id: id.to_string(),
        phase: Phase::Reprompt,
    };
    let activity = match module {
        ModuleId::Riddles => ActivityState::Riddles(state),
        _ => ActivityState::WouldYouRather(state),
    };
    ResponseCandidate::new(module, text, 1.0).update(StateUpdate::SetActivity { activity: Some(activity) })
}

pub fn step_wyr(ctx: &ModuleContext, state: &SequenceState) -> Vec<ResponseCandidate> {
    let module = ModuleId::WouldYouRather;
    match state.phase {
        Phase::Asked => {
            let Some(item) = ctx.packs.wyr.iter().find(|w| w.id == state.item_id) else {
                return vec![exit(module, "Let's try something else. What would you like to talk about?", 1.0)];
            };
            let mine = ORDINALS.get(item.agent_choice).copied().unwrap_or("first");
            let verdict = match chosen_option(ctx, &item.options) {
                Some(i) if i == item.agent_choice => format!("Interesting, I would choose the {mine} option too."),
                Some(_) => format!("Interesting, I would choose the {mine} option instead."),
                None => format!("That's a tough one. I would choose the {mine} option."),
            };
            vec![reprompt(
                module,
                &item.id,
                format!("{verdict} {} Want to hear another?", item.justification),
            )]
        }
        Phase::Reprompt => {
            if declines(ctx.analysis) {
                return vec![exit(module, "Okay, that was fun. What would you like to talk about?", 1.0)];
            }
            if !wants_more(ctx.analysis) {
                return Vec::new();
            }
            match ctx.packs.wyr.iter().find(|w| !ctx.used(&wyr_key(&w.id))) {
                Some(item) => vec![ask_wyr(item, 1.0)],
                None => vec![exit(
                    module,
                    "I'm all out of would you rather questions. What else would you like to talk about?",
                    1.0,
                )
                .expecting("menu.choice")],
            }
        }
    }
}

pub fn step_riddles(ctx: &ModuleContext, state: &SequenceState) -> Vec<ResponseCandidate> {
    let module = ModuleId::Riddles;
    match state.phase {
        Phase::Asked => {
            let Some(r) = ctx.packs.riddles.iter().find(|r| r.id == state.item_id) else {
                return vec![exit(module, "Let's try something else. What would you like to talk about?", 1.0)];
            };
            let correct = ctx
                .analysis
                .all_texts
                .iter()
                .any(|t| check_answer(t, &r.answer));
            let text = if correct {
                format!("You got it! The answer is {}. Want another riddle?", r.answer)
            } else {
                format!("Nice try! The answer is {}. Want another riddle?", r.answer)
            };
            vec![reprompt(module, &r.id, text)]
        }
        Phase::Reprompt => {
            if declines(ctx.analysis) {
                return vec![exit(module, "Okay, no more riddles. What would you like to talk about?", 1.0)];
            }
            if !wants_more(ctx.analysis) {
                return Vec::new();
            }
            match ctx.packs.riddles.iter().find(|r| !ctx.used(&riddle_key(&r.id))) {
                Some(r) => vec![ask_riddle(r, 1.0)],
                None => vec![exit(
                    module,
                    "That was my last riddle. What else would you like to talk about?",
                    1.0,
                )
                .expecting("menu.choice")],
            }
        }
    }
}
