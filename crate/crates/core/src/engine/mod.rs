//! The turn pipeline: analysis, priority intents, candidate collection,
//! scoring, state update, realization and expectation publication.

pub mod menu;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate, Target};
use crate::context::ModuleContext;
use crate::expectation::FunctionRegistry;
use crate::flow::{advance_flow, enter_flow, flow_expectations, trigger_flow, FlowAdvance, FlowError, FlowSet};
use crate::memory::{HistoryEntry, MemoryError, SessionState, TurnEvent};
use crate::mixed::ood::{out_of_domain, HEDGES};
use crate::mixed::opinions::opinion_respond;
use crate::mixed::qa::answer_question;
use crate::mixed::retrieval::retrieve_response;
use crate::nlu::{Analyzer, AsrInput, DialogueAct, StopKind, UtteranceAnalysis};
use crate::packs::Packs;
use crate::realization::{render_output, OpenerTable};
use crate::scoring::{select_response, ContentFilter, ScoringConfig, ScoringContext, ScoringError, ScoringTrace};
use crate::system::{activity_step, find_trigger, offer, start_target, target_topic, ActivityState};
use crate::text::lowercase_first;

pub use menu::build_topic_menu;

pub const CLARIFY: &str = "Sorry, I didn't quite catch that. Could you say that again?";
pub const STOP_CONFIRM: &str = "Did you want to stop talking with me?";
pub const GOODBYE: &str = "Okay, it was great talking with you. Goodbye!";
pub const KEEP_GOING: &str = "Okay, let's keep going.";
pub const NOTHING_TO_REPEAT: &str = "I haven't said anything yet. What would you like to talk about?";
pub const OFFER_DECLINED: &str = "No problem. What would you like to talk about?";
pub const FLOW_EXIT_HEDGE: &str = "Anyways,";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
/// Agent turns checked for a repeated opener.
const OPENER_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub scoring: ScoringConfig,
    /// Story sentences per turn.
    pub story_window: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            scoring: ScoringConfig::default(),
            story_window: 2,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("session {0} is closed")]
    Closed(String),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Debug record of one turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnTrace {
    pub analysis: UtteranceAnalysis,
    /// Why a priority response pre-empted collection, if one did.
    pub priority: Option<String>,
    pub scoring: ScoringTrace,
    pub flow_exit: bool,
    pub module_before: Option<ModuleId>,
    pub flow_before: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnResult {
    pub response: ResponseCandidate,
    pub reply: String,
    pub reply_marked: String,
    pub new_state: SessionState,
    pub expectations: Vec<String>,
    pub end_session: bool,
    pub trace: TurnTrace,
}

/// Everything a turn needs that does not change between turns.
pub struct Engine {
    pub analyzer: Analyzer,
    pub packs: Packs,
    pub flows: FlowSet,
    pub registry: FunctionRegistry,
    pub openers: OpenerTable,
    pub filter: ContentFilter,
    pub config: EngineConfig,
}

/// Deterministic per-turn generator.
pub fn turn_rng(session: &SessionState) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(session.rng_seed ^ session.turn_count.wrapping_add(1).wrapping_mul(GOLDEN))
}

fn base(text: &str, conf: f64) -> ResponseCandidate {
    ResponseCandidate::new(ModuleId::Base, text, conf)
}

impl Engine {
    fn ctx<'a>(&'a self, analysis: &'a UtteranceAnalysis, session: &'a SessionState) -> ModuleContext<'a> {
        ModuleContext {
            analysis,
            session,
            packs: &self.packs,
            analyzer: &self.analyzer,
            story_window: self.config.story_window,
        }
    }

    /// Every starter the out-of-domain module may propose, games first.
    fn starters(&self) -> Vec<Target> {
        let mut out = crate::system::activity_targets(&self.packs);
        out.extend(self.flows.ids().map(|id| Target::Flow(id.to_string())));
        out
    }

    fn start(&self, ctx: &ModuleContext, t: &Target, conf: f64) -> Result<Option<ResponseCandidate>, FlowError> {
        match t {
            Target::Flow(id) => match self.flows.get(id) {
                Some(def) => enter_flow(ctx, def, conf),
                None => Ok(None),
            },
            _ => Ok(start_target(ctx, t, conf)),
        }
    }

    /// Priority responses that pre-empt collection, with the reason.
    fn priority(&self, a: &UtteranceAnalysis, s: &SessionState, rng: &mut ChaCha8Rng) -> Option<(String, ResponseCandidate)> {
        if a.needs_clarification && !s.pending_clarification {
            return Some(("clarification".into(), base(CLARIFY, 1.0).priority()));
        }
        if s.pending_stop {
            match a.dialogue_act {
                DialogueAct::YesAnswer | DialogueAct::StopRequest => {
                    return Some(("stop".into(), base(GOODBYE, 1.0).priority().ending_session()));
                }
                DialogueAct::NoAnswer => {
                    let previous = s.agent_turns().nth(1).map(|h| h.text.clone()).unwrap_or_default();
                    let text = format!("{KEEP_GOING} {previous}").trim_end().to_string();
                    return Some(("stop-declined".into(), base(&text, 1.0).priority()));
                }
                _ => {}
            }
        }
        match a.stop_kind {
            Some(StopKind::Bare) if s.activity.is_some() && !s.pending_stop => {
                let c = base(STOP_CONFIRM, 1.0)
                    .priority()
                    .update(StateUpdate::SetPendingStop { pending: true })
                    .expecting("stop.confirm")
                    .expecting("stop.cancel");
                return Some(("stop-confirm".into(), c));
            }
            Some(_) => return Some(("stop".into(), base(GOODBYE, 1.0).priority().ending_session())),
            None => {}
        }
        if a.dialogue_act == DialogueAct::RepeatRequest {
            let c = match s.last_agent() {
                Some(h) => {
                    let mut c = ResponseCandidate::new(h.origin.unwrap_or(ModuleId::Base), h.text.clone(), 1.0).priority();
                    c.id = "repeat".into();
                    c
                }
                None => base(NOTHING_TO_REPEAT, 1.0).priority(),
            };
            return Some(("repeat".into(), c));
        }
        if a.menu_request {
            return Some(("menu".into(), build_topic_menu(s, &self.flows, &self.packs, rng).priority()));
        }
        None
    }

    /// Candidates from every module, in registration order. Returns whether
    /// the active flow exited this turn.
    fn collect(&self, ctx: &ModuleContext) -> Result<(Vec<ResponseCandidate>, bool), FlowError> {
        let (a, s) = (ctx.analysis, ctx.session);
        let mut pool = Vec::new();
        let mut flow_exit = false;

        if let Some(act) = &s.activity {
            pool.extend(activity_step(ctx, act));
        } else if let Some(fs) = &s.active_flow {
            match advance_flow(ctx, &self.flows, &self.registry, fs)? {
                FlowAdvance::Emit(c) => pool.push(c),
                FlowAdvance::Exit => flow_exit = true,
            }
        }

        if let Some(t) = &s.pending_offer {
            match a.dialogue_act {
                DialogueAct::YesAnswer => pool.extend(self.start(ctx, t, 1.0)?),
                DialogueAct::NoAnswer => pool.push(base(OFFER_DECLINED, 0.7)),
                _ => {}
            }
        }

        pool.extend(trigger_flow(ctx, &self.flows)?);

        let active_module = s.activity.as_ref().map(ActivityState::module);
        if let Some(t) = find_trigger(ctx) {
            let same = match (&t, active_module) {
                (Target::Game(k), Some(m)) => k.module() == m,
                (Target::Story, Some(m)) => m == ModuleId::Storytelling,
                (Target::Riddles, Some(m)) => m == ModuleId::Riddles,
                (Target::WouldYouRather, Some(m)) => m == ModuleId::WouldYouRather,
                (Target::Recursive(topic), _) => s.activity.as_ref().and_then(|x| x.recursive_topic()) == Some(topic),
                (Target::Survey(_), Some(m)) => m == ModuleId::Survey,
                _ => false,
            };
            let chosen = s.expecting("menu.choice") || s.expecting("games.choice") || s.expecting("offer.accept");
            if !same {
                if chosen || matches!(a.dialogue_act, DialogueAct::Command | DialogueAct::Question) {
                    pool.extend(self.start(ctx, &t, 1.0)?);
                } else if a.dialogue_act == DialogueAct::Statement {
                    pool.push(offer(&self.packs, &t, None, 0.8));
                }
            }
        }

        pool.extend(opinion_respond(a, &s.agent_profile));
        if a.dialogue_act == DialogueAct::Question {
            pool.push(answer_question(ctx));
        }
        let topic = a
            .topic
            .as_deref()
            .or_else(|| s.active_flow.as_ref().and_then(|f| self.flows.get(&f.flow_id)).map(|d| d.topic.as_str()));
        pool.extend(retrieve_response(&self.packs.retrieval, a, topic, &self.packs.retrieval_config));
        if a.dialogue_act == DialogueAct::Greeting {
            let text = match &s.user_name {
                Some(n) => format!("Hi {n}! It's good to hear from you. What would you like to talk about?"),
                None => "Hi there! I'm happy to chat. What would you like to talk about?".to_string(),
            };
            pool.push(base(&text, 0.8));
        }
        pool.push(out_of_domain(ctx, &self.starters()));
        Ok((pool, flow_exit))
    }

    /// Runs one user turn against `session` and returns the successor state.
    pub fn process_turn(&self, session: &SessionState, input: &AsrInput) -> Result<TurnResult, EngineError> {
        if session.closed {
            return Err(EngineError::Closed(session.session_id.clone()));
        }
        let raw = self.analyzer.analyze(input);
        let analysis = self.analyzer.resolve_coreference(&raw, &session.history);
        let mut rng = turn_rng(session);
        let ctx = self.ctx(&analysis, session);

        let (priority, pool, flow_exit) = match self.priority(&analysis, session, &mut rng) {
            Some((why, c)) => (Some(why), vec![c], false),
            None => {
                let (pool, exit) = self.collect(&ctx)?;
                (None, pool, exit)
            }
        };
        let mut pool = pool;
        for c in &mut pool {
            c.content_words = self.analyzer.content_words(&c.text);
            c.entities = self.analyzer.entities(&c.text).into_iter().map(|e| e.canonical_id).collect();
        }
        let scoring_ctx = ScoringContext {
            analysis: &analysis,
            active_module: session.active_module,
            used_prompts: &session.used_prompts,
            config: self.config.scoring,
        };
        let (mut winner, scoring) = select_response(pool, &scoring_ctx, &self.filter, &mut rng)?;
        let is_repeat = priority.as_deref() == Some("repeat");

        if !is_repeat {
            let recent: Vec<&str> = session.agent_turns().take(OPENER_WINDOW).map(|h| h.text.as_str()).collect();
            let varied = self.openers.vary_opener(&winner.text, &recent, &mut rng);
            shift_text(&mut winner, varied);
        }
        if flow_exit && winner.origin != ModuleId::Flow {
            if !HEDGES.iter().any(|h| winner.text.starts_with(h)) {
                let text = format!("{FLOW_EXIT_HEDGE} {}", keep_case_lower(&winner.text));
                shift_text(&mut winner, text);
            }
            winner.postconditions.push(StateUpdate::SetFlow { flow: None });
        }

        let mut updates = Vec::new();
        if session.pending_offer.is_some() {
            updates.push(StateUpdate::SetOffer { offer: None });
        }
        if session.pending_stop {
            updates.push(StateUpdate::SetPendingStop { pending: false });
        }
        updates.extend(winner.postconditions.iter().cloned());
        if let Some(act) = &session.activity {
            let sets_activity = winner.next_activity().is_some();
            let foreign = winner.origin != act.module();
            if foreign && !winner.is_priority && !sets_activity && !act.routes_back() {
                updates.push(StateUpdate::SetActivity { activity: None });
            }
        }
        if let Some(p) = &winner.prompt_id {
            updates.push(StateUpdate::MarkPromptUsed { prompt_id: p.clone() });
        }
        let updates: Vec<StateUpdate> = updates
            .into_iter()
            .flat_map(|u| match u {
                StateUpdate::CallFunction { name } => self.registry.call_action(&name, &analysis, session),
                other => vec![other],
            })
            .collect();

        let (reply, reply_marked) = render_output(&winner);
        let agent_analysis = self.analyzer.analyze_text(&reply);
        let event = TurnEvent {
            session_id: session.session_id.clone(),
            user: Some(HistoryEntry::user(analysis.primary_text.clone(), Some(analysis.clone()))),
            agent: Some(HistoryEntry::agent(reply.clone(), Some(agent_analysis), winner.origin, reply_marked.clone())),
            updates,
        };
        let mut next = session.stm_update(&event)?;
        next.pending_clarification = priority.as_deref() == Some("clarification");

        let expectations = if next.pending_clarification || is_repeat {
            session.expectations.clone()
        } else {
            self.publish(&next, &winner)
        };
        next.expectations = expectations.clone();
        let end_session = winner.ends_session;
        if end_session {
            next.closed = true;
        }
        Ok(TurnResult {
            trace: TurnTrace {
                analysis,
                priority,
                scoring,
                flow_exit,
                module_before: session.active_module,
                flow_before: session.active_flow.as_ref().map(|f| f.flow_id.clone()),
            },
            response: winner,
            reply,
            reply_marked,
            new_state: next,
            expectations,
            end_session,
        })
    }

    /// Expectation ids live after the turn: the activity's, else the active
    /// flow's edges, then whatever the winner itself asked for.
    fn publish(&self, next: &SessionState, winner: &ResponseCandidate) -> Vec<String> {
        let mut out: Vec<String> = match (&next.activity, &next.active_flow) {
            (Some(a), _) => a.expectations(),
            (None, Some(f)) => flow_expectations(&self.flows, f),
            (None, None) => Vec::new(),
        };
        for e in &winner.expects {
            if !out.contains(e) {
                out.push(e.clone());
            }
        }
        out
    }

    /// Topic keys of every menu-able target.
    pub fn topic_keys(&self) -> Vec<String> {
        menu::menu_targets(&self.flows, &self.packs).iter().map(target_topic).collect()
    }
}

/// Lowercases the first letter unless the text opens with "I" or a name.
fn keep_case_lower(text: &str) -> String {
    let first = text.split_whitespace().next().unwrap_or("");
    let keep = first == "I" || first.starts_with("I'") || first.chars().skip(1).any(char::is_uppercase);
    if keep {
        text.to_string()
    } else {
        lowercase_first(text)
    }
}

/// Replaces the text of `c`, shifting pauses by the change in length. Only
/// the head of the text is ever rewritten.
fn shift_text(c: &mut ResponseCandidate, text: String) {
    let old = c.text.chars().count() as isize;
    let new = text.chars().count() as isize;
    let delta = new - old;
    if delta != 0 {
        for p in &mut c.ssml_pauses {
            p.offset = (p.offset as isize + delta).max(0) as usize;
        }
    }
    c.text = text;
}
