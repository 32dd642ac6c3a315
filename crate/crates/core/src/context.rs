//! Read-only view of one turn handed to every responder.

use crate::memory::SessionState;
use crate::nlu::{Analyzer, UtteranceAnalysis};
use crate::packs::Packs;

#[derive(Clone, Copy)]
pub struct ModuleContext<'a> {
    pub analysis: &'a UtteranceAnalysis,
    pub session: &'a SessionState,
    pub packs: &'a Packs,
    pub analyzer: &'a Analyzer,
    /// Sentences per story turn.
    pub story_window: usize,
}

impl ModuleContext<'_> {
    /// Whether a fact, story or question id was already used this session.
    pub fn used(&self, id: &str) -> bool {
        self.session.used_facts.contains(id)
    }

    /// Any hypothesis contains `phrase` on token boundaries.
    pub fn mentions(&self, phrase: &str) -> bool {
        let p = crate::text::tokenize(phrase);
        !p.is_empty()
            && std::iter::once(self.analysis.tokens.clone())
                .chain(self.analysis.hypothesis_tokens())
                .any(|t| crate::text::contains_phrase(&t, &p))
    }
}
