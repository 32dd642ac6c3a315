//! Out-of-domain recovery when no responder is confident: pivot on a
//! detected entity, or hedge and propose something new.

use crate::candidate::{ModuleId, ResponseCandidate, Target};
use crate::context::ModuleContext;
use crate::nlu::EntityType;
use crate::system::{offer, target_topic};

pub const OOD_CONFIDENCE: f64 = 0.3;
pub const HEDGES: [&str; 2] = ["Moving on,", "Anyways,"];

fn hedge(ctx: &ModuleContext) -> &'static str {
    let used = ctx
        .session
        .agent_turns()
        .filter(|h| HEDGES.iter().any(|p| h.text.starts_with(p)))
        .count();
    HEDGES[used % HEDGES.len()]
}

/// Entity pivots in preference order: opinion, ask for more, synonym
/// check, encyclopedia summary. Without an entity, a hedge followed by the
/// first starter whose topic is unexplored.
pub fn out_of_domain(ctx: &ModuleContext, starters: &[Target]) -> ResponseCandidate {
    let a = ctx.analysis;
    let lex = ctx.analyzer.lexicon().gazetteer();
    for e in &a.entities {
        if let Some(o) = ctx.session.agent_profile.get(&e.canonical_id) {
            return ResponseCandidate::new(ModuleId::OutOfDomain, o.statement.clone(), OOD_CONFIDENCE)
                .topic(o.category.clone());
        }
    }
    for e in &a.entities {
        let display = lex.get(&e.canonical_id).map(|g| g.display.clone()).unwrap_or_else(|| e.surface.clone());
        let prompt = format!("ood.ask.{}", e.canonical_id);
        let askable = matches!(e.entity_type, EntityType::Person | EntityType::MediaTitle | EntityType::Place);
        if askable && !ctx.session.used_prompts.contains(&prompt) {
            return ResponseCandidate::new(
                ModuleId::OutOfDomain,
                format!("I'd love to hear more. What do you think about {display}?"),
                OOD_CONFIDENCE,
            )
            .prompt(prompt);
        }
    }
    for e in &a.entities {
        if let Some(syn) = lex.get(&e.canonical_id).and_then(|g| g.synonyms.first()) {
            if !syn.eq_ignore_ascii_case(&e.surface) {
                return ResponseCandidate::new(ModuleId::OutOfDomain, format!("Did you mean {syn}?"), OOD_CONFIDENCE);
            }
        }
    }
    for e in &a.entities {
        if let Some(s) = ctx.packs.encyclopedia.summary(&e.canonical_id) {
            return ResponseCandidate::new(ModuleId::OutOfDomain, format!("Here's what I know. {s}"), OOD_CONFIDENCE);
        }
    }

    let h = hedge(ctx);
    match starters
        .iter()
        .find(|t| !ctx.session.explored_topics.contains(&target_topic(t)))
    {
        Some(t) => {
            let mut c = offer(ctx.packs, t, Some(h), OOD_CONFIDENCE);
            c.origin = ModuleId::OutOfDomain;
            c
        }
        None => ResponseCandidate::new(
            ModuleId::OutOfDomain,
            format!("{h} what would you like to talk about next?"),
            OOD_CONFIDENCE,
        )
        .expecting("menu.choice"),
    }
}
