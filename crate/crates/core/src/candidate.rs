//! Response candidates and the state updates they carry.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::flow::FlowState;
use crate::system::ActivityState;

/// Every module that can put a candidate in the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleId {
    /// Repeat, stop, clarification and menu handling.
    Base,
    Opinions,
    QuestionAnswering,
    Retrieval,
    OutOfDomain,
    Storytelling,
    Nim,
    CityNames,
    Trivia,
    FastMoney,
    TextAdventure,
    Survey,
    Riddles,
    WouldYouRather,
    Recursive,
    Flow,
}

impl ModuleId {
    pub const ALL: [ModuleId; 16] = [
        ModuleId::Base,
        ModuleId::Opinions,
        ModuleId::QuestionAnswering,
        ModuleId::Retrieval,
        ModuleId::OutOfDomain,
        ModuleId::Storytelling,
        ModuleId::Nim,
        ModuleId::CityNames,
        ModuleId::Trivia,
        ModuleId::FastMoney,
        ModuleId::TextAdventure,
        ModuleId::Survey,
        ModuleId::Riddles,
        ModuleId::WouldYouRather,
        ModuleId::Recursive,
        ModuleId::Flow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModuleId::Base => "base",
            ModuleId::Opinions => "opinions",
            ModuleId::QuestionAnswering => "question_answering",
            ModuleId::Retrieval => "retrieval",
            ModuleId::OutOfDomain => "out_of_domain",
            ModuleId::Storytelling => "storytelling",
            ModuleId::Nim => "nim",
            ModuleId::CityNames => "city_names",
            ModuleId::Trivia => "trivia",
            ModuleId::FastMoney => "fast_money",
            ModuleId::TextAdventure => "text_adventure",
            ModuleId::Survey => "survey",
            ModuleId::Riddles => "riddles",
            ModuleId::WouldYouRather => "would_you_rather",
            ModuleId::Recursive => "recursive",
            ModuleId::Flow => "flow",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Activities that hold the initiative.
    pub fn is_system_initiative(self) -> bool {
        matches!(
            self,
            ModuleId::Storytelling
                | ModuleId::Nim
                | ModuleId::CityNames
                | ModuleId::Trivia
                | ModuleId::FastMoney
                | ModuleId::TextAdventure
                | ModuleId::Survey
                | ModuleId::Riddles
                | ModuleId::WouldYouRather
                | ModuleId::Recursive
        )
    }
}

impl fmt::Display for ModuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Nim,
    CityNames,
    Trivia,
    FastMoney,
    TextAdventure,
}

impl GameKind {
    pub fn module(self) -> ModuleId {
        match self {
            GameKind::Nim => ModuleId::Nim,
            GameKind::CityNames => ModuleId::CityNames,
            GameKind::Trivia => ModuleId::Trivia,
            GameKind::FastMoney => ModuleId::FastMoney,
            GameKind::TextAdventure => ModuleId::TextAdventure,
        }
    }
}

/// Something the agent can start or offer to start.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "id")]
pub enum Target {
    Story,
    GameMenu,
    Game(GameKind),
    Survey(String),
    Recursive(String),
    Riddles,
    WouldYouRather,
    Flow(String),
}

/// A deferred effect of a candidate; applied only if it wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum StateUpdate {
    /// Flow variable on the active (or most recent) flow.
    SetVar { name: String, value: String },
    /// Registered postcondition function; expanded by the engine.
    CallFunction { name: String },
    MarkTopicExplored { topic: String },
    MarkPromptUsed { prompt_id: String },
    MarkFactUsed { fact_id: String },
    SetActivity { activity: Option<ActivityState> },
    SetFlow { flow: Option<FlowState> },
    SetOffer { offer: Option<Target> },
    SetPendingStop { pending: bool },
    SetUserName { name: String },
    /// A flow's entry prompt was delivered.
    FlowPrompted { flow_id: String },
}

/// A break of `millis` after the character at `offset` in the plain text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pause {
    pub offset: usize,
    pub millis: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCandidate {
    pub id: String,
    pub text: String,
    pub origin: ModuleId,
    pub base_confidence: f64,
    pub confidence: f64,
    pub is_priority: bool,
    pub is_prompt: bool,
    pub prompt_id: Option<String>,
    pub topic: Option<String>,
    /// Content words of `text`; filled by the engine before scoring.
    pub content_words: Vec<String>,
    /// Canonical entity ids in `text`; filled by the engine before scoring.
    pub entities: Vec<String>,
    pub postconditions: Vec<StateUpdate>,
    pub ssml_pauses: Vec<Pause>,
    pub ends_session: bool,
    /// Expectation ids this candidate publishes beyond those of the active
    /// flow or activity (menus, offers).
    #[serde(default)]
    pub expects: Vec<String>,
}

impl ResponseCandidate {
    pub fn new(origin: ModuleId, text: impl Into<String>, base_confidence: f64) -> Self {
        let base = base_confidence.clamp(0.0, 1.0);
        Self {
            id: String::new(),
            text: text.into(),
            origin,
            base_confidence: base,
            confidence: base,
            is_priority: false,
            is_prompt: false,
            prompt_id: None,
            topic: None,
            content_words: Vec::new(),
            entities: Vec::new(),
            postconditions: Vec::new(),
            ssml_pauses: Vec::new(),
            ends_session: false,
            expects: Vec::new(),
        }
    }

    /// Replaces the base confidence (and the running confidence with it).
    pub fn with_base(mut self, base: f64) -> Self {
        self.base_confidence = base.clamp(0.0, 1.0);
        self.confidence = self.base_confidence;
        self
    }

    pub fn priority(mut self) -> Self {
        self.is_priority = true;
        self
    }

    pub fn prompt(mut self, prompt_id: impl Into<String>) -> Self {
        self.is_prompt = true;
        self.prompt_id = Some(prompt_id.into());
        self
    }

    pub fn topic(mut self, topic: impl Into<String>) -> Self {
        self.topic = Some(topic.into());
        self
    }

    pub fn update(mut self, update: StateUpdate) -> Self {
        self.postconditions.push(update);
        self
    }

    pub fn updates(mut self, updates: impl IntoIterator<Item = StateUpdate>) -> Self {
        self.postconditions.extend(updates);
        self
    }

    pub fn pause(mut self, offset: usize, millis: u32) -> Self {
        self.ssml_pauses.push(Pause { offset, millis });
        self
    }

    pub fn expecting(mut self, id: impl Into<String>) -> Self {
        self.expects.push(id.into());
        self
    }

    pub fn ending_session(mut self) -> Self {
        self.ends_session = true;
        self
    }

    /// Activity the candidate leaves behind if it wins, when it sets one.
    pub fn next_activity(&self) -> Option<&Option<ActivityState>> {
        self.postconditions.iter().rev().find_map(|u| match u {
            StateUpdate::SetActivity { activity } => Some(activity),
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_ids_round_trip_through_names() {
        for m in ModuleId::ALL {
            assert_eq!(ModuleId::parse(m.as_str()), Some(m));
        }
    }

    #[test]
    fn base_confidence_is_clamped() {
        assert_eq!(ResponseCandidate::new(ModuleId::Base, "x", 1.7).confidence, 1.0);
        assert_eq!(ResponseCandidate::new(ModuleId::Base, "x", -0.2).confidence, 0.0);
    }
}
