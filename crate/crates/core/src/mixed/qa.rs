//! Question answering: reflective probes for thin questions, the active
//! activity's own answers, then the knowledge chain.

use std::collections::BTreeSet;

use super::eliza;
use super::knowledge::{normalize_query, KnowledgeQuery};
use crate::candidate::{ModuleId, ResponseCandidate};
use crate::context::ModuleContext;
use crate::system::{story, ActivityState};

/// Questions with fewer content words get a reflective probe.
pub const MIN_CONTENT_WORDS: usize = 2;
pub const UNSURE_CONFIDENCE: f64 = 0.45;

const UNSURE: &[&str] = &[
    "I'm not sure about that one.",
    "Hmm, I don't know the answer to that one.",
    "That's a good question, but I'm not sure.",
];

/// Answer from the knowledge chain for the (coreference-resolved) turn.
pub fn search_answer(ctx: &ModuleContext) -> Option<ResponseCandidate> {
    let a = ctx.analysis;
    let query = KnowledgeQuery {
        text: normalize_query(&a.tokens.join(" ")),
        content_words: a.content_words.iter().cloned().collect::<BTreeSet<_>>(),
        entities: a.entity_ids().map(str::to_string).collect(),
    };
    let (answer, outcomes) = ctx.packs.knowledge.ask(&query);
    log::debug!("knowledge chain for {:?}: {outcomes:?}", query.text);
    let answer = answer?;
    let mut c = ResponseCandidate::new(ModuleId::QuestionAnswering, answer.text, answer.source.confidence());
    c.id = format!("qa:{}", answer.id);
    Some(c)
}

fn unsure(ctx: &ModuleContext) -> ResponseCandidate {
    let recent: Vec<&str> = ctx.session.agent_turns().take(3).map(|h| h.text.as_str()).collect();
    let text = UNSURE.iter().find(|u| !recent.contains(u)).unwrap_or(&UNSURE[0]);
    ResponseCandidate::new(ModuleId::QuestionAnswering, *text, UNSURE_CONFIDENCE)
}

/// Always produces a candidate; the unsure message is the floor.
pub fn answer_question(ctx: &ModuleContext) -> ResponseCandidate {
    let a = ctx.analysis;
    if a.content_words.len() < MIN_CONTENT_WORDS {
        let (text, matched) = eliza::respond(&a.primary_text, ctx.session.turn_count);
        return ResponseCandidate::new(ModuleId::QuestionAnswering, text, if matched { 0.8 } else { 0.6 });
    }
    if let Some(ActivityState::Story(state)) = &ctx.session.activity {
        if let Some(text) = story::answer(ctx, state) {
            return ResponseCandidate::new(ModuleId::Storytelling, text, 0.95);
        }
    }
    search_answer(ctx).unwrap_or_else(|| unsure(ctx))
}
