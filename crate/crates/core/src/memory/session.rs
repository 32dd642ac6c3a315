use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MemoryError;
use crate::candidate::{ModuleId, StateUpdate, Target};
use crate::flow::FlowState;
use crate::mixed::opinions::OpinionProfile;
use crate::nlu::UtteranceAnalysis;
use crate::system::ActivityState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub speaker: Speaker,
    pub text: String,
    pub analysis: Option<UtteranceAnalysis>,
    /// Module that produced an agent turn.
    #[serde(default)]
    pub origin: Option<ModuleId>,
    /// Speech-marked form of an agent turn.
    #[serde(default)]
    pub marked: Option<String>,
}

impl HistoryEntry {
    pub fn user(text: impl Into<String>, analysis: Option<UtteranceAnalysis>) -> Self {
        Self {
            speaker: Speaker::User,
            text: text.into(),
            analysis,
            origin: None,
            marked: None,
        }
    }

    pub fn agent(text: impl Into<String>, analysis: Option<UtteranceAnalysis>, origin: ModuleId, marked: String) -> Self {
        Self {
            speaker: Speaker::Agent,
            text: text.into(),
            analysis,
            origin: Some(origin),
            marked: Some(marked),
        }
    }
}

/// Bookkeeping for the metrics report and session summary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    /// Incremented each time an activity or flow starts.
    pub episode: u64,
    /// User turns keyed by the module active when the turn began.
    pub module_turns: BTreeMap<String, u64>,
    pub flows_prompted: BTreeMap<String, u64>,
    pub flows_utilized: BTreeMap<String, u64>,
    /// User turns spent in the current flow episode.
    pub flow_episode_turns: u64,
}

/// Everything the engine knows about one live conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub user_id: Option<String>,
    pub user_name: Option<String>,
    pub turn_count: u64,
    pub history: Vec<HistoryEntry>,
    pub active_module: Option<ModuleId>,
    pub active_flow: Option<FlowState>,
    pub activity: Option<ActivityState>,
    pub explored_topics: BTreeSet<String>,
    pub used_prompts: BTreeSet<String>,
    pub used_facts: BTreeSet<String>,
    pub agent_profile: OpinionProfile,
    /// Expectation ids published after the last agent turn.
    pub expectations: Vec<String>,
    pub pending_clarification: bool,
    pub pending_offer: Option<Target>,
    pub pending_stop: bool,
    /// Last known state of every flow entered this session, for re-entry.
    pub flow_memory: BTreeMap<String, FlowState>,
    pub counters: Counters,
    pub rng_seed: u64,
    pub closed: bool,
}

/// One turn's worth of changes for [`SessionState::stm_update`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TurnEvent {
    pub session_id: String,
    pub user: Option<HistoryEntry>,
    pub agent: Option<HistoryEntry>,
    pub updates: Vec<StateUpdate>,
}

impl TurnEvent {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            ..Self::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.user.is_none() && self.agent.is_none() && self.updates.is_empty()
    }
}

impl SessionState {
    pub fn new(session_id: impl Into<String>, rng_seed: u64) -> Self {
        Self {
            session_id: session_id.into(),
            user_id: None,
            user_name: None,
            turn_count: 0,
            history: Vec::new(),
            active_module: None,
            active_flow: None,
            activity: None,
            explored_topics: BTreeSet::new(),
            used_prompts: BTreeSet::new(),
            used_facts: BTreeSet::new(),
            agent_profile: OpinionProfile::default(),
            expectations: Vec::new(),
            pending_clarification: false,
            pending_offer: None,
            pending_stop: false,
            flow_memory: BTreeMap::new(),
            counters: Counters::default(),
            rng_seed,
            closed: false,
        }
    }

    pub fn last_agent(&self) -> Option<&HistoryEntry> {
        self.history.iter().rev().find(|h| h.speaker == Speaker::Agent)
    }

    /// Agent turns, newest first.
    pub fn agent_turns(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.history.iter().rev().filter(|h| h.speaker == Speaker::Agent)
    }

    pub fn expecting(&self, id: &str) -> bool {
        self.expectations.iter().any(|e| e == id)
    }

    /// Applies `event` and returns the successor state. The receiver is left
    /// untouched.
    pub fn stm_update(&self, event: &TurnEvent) -> Result<SessionState, MemoryError> {
        if event.session_id != self.session_id {
            return Err(MemoryError::SessionMismatch {
                session: self.session_id.clone(),
                event: event.session_id.clone(),
            });
        }
        let mut next = self.clone();
        if event.is_empty() {
            return Ok(next);
        }

        if let Some(user) = &event.user {
            next.turn_count += 1;
            next.history.push(user.clone());
            if let Some(m) = self.active_module {
                *next.counters.module_turns.entry(m.as_str().to_string()).or_default() += 1;
            }
            if let Some(flow) = &self.active_flow {
                next.counters.flow_episode_turns += 1;
                if next.counters.flow_episode_turns == 3 {
                    *next.counters.flows_utilized.entry(flow.flow_id.clone()).or_default() += 1;
                }
            }
        }
        if let Some(agent) = &event.agent {
            next.history.push(agent.clone());
        }

        for update in &event.updates {
            next.apply(update);
        }
        if let Some(flow) = &next.active_flow {
            next.flow_memory.insert(flow.flow_id.clone(), flow.clone());
        }
        next.active_module = match (&next.activity, &next.active_flow) {
            (Some(a), _) => Some(a.module()),
            (None, Some(_)) => Some(ModuleId::Flow),
            (None, None) => None,
        };
        Ok(next)
    }

    fn park_flow(&mut self) {
        if let Some(flow) = self.active_flow.take() {
            self.flow_memory.insert(flow.flow_id.clone(), flow);
        }
    }

    fn apply(&mut self, update: &StateUpdate) {
        match update {
            StateUpdate::SetVar { name, value } => match self.active_flow.as_mut() {
                Some(flow) => {
                    flow.vars.insert(name.clone(), value.clone());
                }
                None => log::warn!("SetVar {name} with no active flow"),
            },
            StateUpdate::CallFunction { name } => {
                log::warn!("unexpanded postcondition function {name}");
            }
            StateUpdate::MarkTopicExplored { topic } => {
                self.explored_topics.insert(topic.clone());
            }
            StateUpdate::MarkPromptUsed { prompt_id } => {
                self.used_prompts.insert(prompt_id.clone());
            }
            StateUpdate::MarkFactUsed { fact_id } => {
                self.used_facts.insert(fact_id.clone());
            }
            StateUpdate::SetActivity { activity } => {
                if let Some(a) = activity {
                    self.park_flow();
                    if self.activity.as_ref().map(ActivityState::module) != Some(a.module()) {
                        self.counters.episode += 1;
                    }
                }
                self.activity = activity.clone();
            }
            StateUpdate::SetFlow { flow } => match flow {
                Some(f) => {
                    self.activity = None;
                    let same = self.active_flow.as_ref().is_some_and(|cur| cur.flow_id == f.flow_id);
                    if !same {
                        self.park_flow();
                        self.counters.episode += 1;
                        self.counters.flow_episode_turns = 0;
                    }
                    self.active_flow = Some(f.clone());
                }
                None => self.park_flow(),
            },
            StateUpdate::SetOffer { offer } => self.pending_offer = offer.clone(),
            StateUpdate::SetPendingStop { pending } => self.pending_stop = *pending,
            StateUpdate::SetUserName { name } => self.user_name = Some(name.clone()),
            StateUpdate::FlowPrompted { flow_id } => {
                *self.counters.flows_prompted.entry(flow_id.clone()).or_default() += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn user_turn(id: &str, text: &str) -> TurnEvent {
        TurnEvent {
            session_id: id.into(),
            user: Some(HistoryEntry::user(text, None)),
            ..TurnEvent::default()
        }
    }

    #[test]
    fn prompt_recorded_as_used() {
        let s = SessionState::new("s1", 7);
        let mut ev = user_turn("s1", "hi");
        ev.updates.push(StateUpdate::MarkPromptUsed {
            prompt_id: "offer.game".into(),
        });
        let n = s.stm_update(&ev).unwrap();
        assert!(n.used_prompts.contains("offer.game"));
        assert_eq!(n.turn_count, 1);
        assert_eq!(s.turn_count, 0);
    }

    #[test]
    fn empty_event_is_identity() {
        let s = SessionState::new("s1", 7);
        assert_eq!(s.stm_update(&TurnEvent::new("s1")).unwrap(), s);
    }

    #[test]
    fn mismatched_session_rejected() {
        let s = SessionState::new("s1", 7);
        assert!(matches!(
            s.stm_update(&TurnEvent::new("s2")),
            Err(MemoryError::SessionMismatch { .. })
        ));
    }

    #[test]
    fn flow_counted_utilized_after_third_turn() {
        let mut s = SessionState::new("s1", 1);
        let mut ev = user_turn("s1", "i like video games");
        ev.updates = vec![
            StateUpdate::SetFlow {
                flow: Some(FlowState::new("video_games", "start")),
            },
            StateUpdate::FlowPrompted {
                flow_id: "video_games".into(),
            },
        ];
        s = s.stm_update(&ev).unwrap();
        assert_eq!(s.active_module, Some(ModuleId::Flow));
        for i in 0..3 {
            assert!(!s.counters.flows_utilized.contains_key("video_games"), "turn {i}");
            s = s.stm_update(&user_turn("s1", "yes")).unwrap();
        }
        assert_eq!(s.counters.flows_utilized["video_games"], 1);
        assert_eq!(s.counters.flows_prompted["video_games"], 1);
    }

    #[test]
    fn leaving_a_flow_keeps_its_memory() {
        let s = SessionState::new("s1", 1);
        let mut fs = FlowState::new("books", "genre");
        fs.vars.insert("genre".into(), "mystery".into());
        let mut ev = user_turn("s1", "books");
        ev.updates.push(StateUpdate::SetFlow { flow: Some(fs) });
        let s = s.stm_update(&ev).unwrap();
        let mut ev = user_turn("s1", "anyway");
        ev.updates.push(StateUpdate::SetFlow { flow: None });
        let s = s.stm_update(&ev).unwrap();
        assert!(s.active_flow.is_none());
        assert_eq!(s.active_module, None);
        assert_eq!(s.flow_memory["books"].vars["genre"], "mystery");
    }
}
