//! Collaborative text adventures: the user adds to the story, the agent
//! continues from prompt-specific branch templates.

use serde::{Deserialize, Serialize};

use super::super::{exit, quits, ActivityState};
use super::GameState;
use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use crate::context::ModuleContext;
use crate::text::{contains_phrase, tokenize};

/// User contributions before the adventure wraps up.
pub const CONTRIBUTIONS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub keywords: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adventure {
    pub id: String,
    pub opening: String,
    pub branches: Vec<Branch>,
    pub continuations: Vec<String>,
    pub ending: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdventureState {
    pub adventure_id: String,
    pub step: usize,
    pub story_so_far: Vec<String>,
}

fn adventure_key(id: &str) -> String {
    format!("adventure:{id}")
}

fn continuing(state: AdventureState, text: String, base: f64) -> ResponseCandidate {
    ResponseCandidate::new(ModuleId::TextAdventure, text, base).update(StateUpdate::SetActivity {
        activity: Some(ActivityState::Game(GameState::TextAdventure(state))),
    })
}

pub fn start(ctx: &ModuleContext, base: f64) -> Option<ResponseCandidate> {
    let adv = ctx.packs.adventures.iter().find(|a| !ctx.used(&adventure_key(&a.id)))?;
    let text = format!("Let's build a story together. {} What do you do?", adv.opening);
    let state = AdventureState {
        adventure_id: adv.id.clone(),
        step: 0,
        story_so_far: vec![adv.opening.clone()],
    };
    Some(
        continuing(state, text, base)
            .topic("games")
            .update(StateUpdate::MarkFactUsed {
                fact_id: adventure_key(&adv.id),
            })
            .update(StateUpdate::MarkTopicExplored { topic: "games".into() }),
    )
}

pub fn step(ctx: &ModuleContext, state: &AdventureState) -> Vec<ResponseCandidate> {
    let module = ModuleId::TextAdventure;
    let Some(adv) = ctx.packs.adventures.iter().find(|a| a.id == state.adventure_id) else {
        return vec![exit(module, "Let's do something else. What would you like to talk about?", 1.0)];
    };
    if quits(ctx.analysis) {
        return vec![exit(module, "Okay, we'll leave our story there. What would you like to talk about?", 1.0)];
    }
    let mut next = state.clone();
    next.story_so_far.push(ctx.analysis.all_texts[0].clone());
    next.step += 1;
    if next.step >= CONTRIBUTIONS {
        return vec![exit(
            module,
            &format!("{} Thanks for building this story with me!", adv.ending),
            1.0,
        )];
    }
    let tokens = &ctx.analysis.tokens;
    let branch = adv
        .branches
        .iter()
        .find(|b| b.keywords.iter().any(|k| contains_phrase(tokens, &tokenize(k))))
        .map(|b| b.text.clone());
    let line = branch.unwrap_or_else(|| {
        if adv.continuations.is_empty() {
            "Something unexpected happens.".to_string()
        } else {
            adv.continuations[(next.step - 1) % adv.continuations.len()].clone()
        }
    });
    next.story_so_far.push(line.clone());
    vec![continuing(next, format!("{line} What do you do next?"), 1.0)]
}
