//! Fact loops: one fact per turn until the user declines or the topic runs
//! dry.

use serde::{Deserialize, Serialize};

use super::{declines, exit, wants_more, ActivityState};
use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use crate::context::ModuleContext;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactTopic {
    pub topic: String,
    /// Spoken name, e.g. "science".
    pub label: String,
    /// Phrases that request this topic.
    pub keywords: Vec<String>,
    pub facts: Vec<Fact>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecursiveState {
    pub topic: String,
    pub delivered: u32,
}

/// Lead-in and continuation prompt for the n-th fact (0-based) of a run.
fn frame(n: u32) -> (&'static str, &'static str) {
    const LATER: [(&str, &str); 3] = [
        ("How about this one.", "Want to hear more?"),
        ("Here's another one.", "Should I keep going?"),
        ("Okay, listen to this.", "Want one more?"),
    ];
    if n == 0 {
        ("Did you know that", "Want to hear another?")
    } else {
        LATER[((n - 1) % 3) as usize]
    }
}

pub fn fact_key(topic: &str, id: &str) -> String {
    format!("fact:{topic}:{id}")
}

fn next_fact<'a>(ctx: &ModuleContext, topic: &'a FactTopic) -> Option<&'a Fact> {
    topic.facts.iter().find(|f| !ctx.used(&fact_key(&topic.topic, &f.id)))
}

fn deliver(topic: &FactTopic, fact: &Fact, delivered: u32, base: f64) -> ResponseCandidate {
    let (lead, more) = frame(delivered);
    let mut c = ResponseCandidate::new(ModuleId::Recursive, format!("{lead} {} {more}", fact.text), base)
        .topic(format!("{}_facts", topic.topic))
        .update(StateUpdate::MarkFactUsed {
            fact_id: fact_key(&topic.topic, &fact.id),
        })
        .update(StateUpdate::SetActivity {
            activity: Some(ActivityState::Recursive(RecursiveState {
                topic: topic.topic.clone(),
                delivered: delivered + 1,
            })),
        });
    c.id = format!("fact:{}:{}", topic.topic, fact.id);
    c
}

pub fn start(ctx: &ModuleContext, topic_id: &str, base: f64) -> Option<ResponseCandidate> {
    let topic = ctx.packs.fact_topic(topic_id)?;
    let fact = next_fact(ctx, topic)?;
    Some(deliver(topic, fact, 0, base).update(StateUpdate::MarkTopicExplored {
        topic: format!("{}_facts", topic.topic),
    }))
}

pub fn step(ctx: &ModuleContext, state: &RecursiveState) -> Vec<ResponseCandidate> {
    let Some(topic) = ctx.packs.fact_topic(&state.topic) else {
        return vec![exit(ModuleId::Recursive, "What would you like to talk about?", 1.0)];
    };
    let a = ctx.analysis;
    if declines(a) {
        return vec![exit(
            ModuleId::Recursive,
            &format!("Okay, no more {} facts for now. What would you like to talk about?", topic.label),
            1.0,
        )];
    }
    if !wants_more(a) {
        return Vec::new();
    }
    match next_fact(ctx, topic) {
        Some(f) => vec![deliver(topic, f, state.delivered, 1.0)],
        None => vec![exit(
            ModuleId::Recursive,
            &format!(
                "That's all the {} facts I know for now. What else would you like to talk about?",
                topic.label
            ),
            1.0,
        )
        .expecting("menu.choice")],
    }
}
