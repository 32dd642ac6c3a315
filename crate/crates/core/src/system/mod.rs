//! System-initiative activities: stories, games, surveys, fact loops and
//! two-turn sequences. Each keeps the initiative until it ends or the user
//! leaves.

pub mod answer;
pub mod games;
pub mod recursive;
pub mod sequences;
pub mod story;
pub mod survey;

use serde::{Deserialize, Serialize};

use crate::candidate::{GameKind, ModuleId, ResponseCandidate, StateUpdate, Target};
use crate::context::ModuleContext;
use crate::nlu::{DialogueAct, UtteranceAnalysis};
use crate::packs::Packs;
use crate::text::{capitalize_first, contains_phrase, join_list, tokenize};

pub use games::GameState;
pub use recursive::RecursiveState;
pub use sequences::{Phase, SequenceState};
pub use story::StoryState;
pub use survey::SurveyState;

/// The activity holding the initiative, with its progress.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "activity")]
pub enum ActivityState {
    Story(StoryState),
    Game(GameState),
    Survey(SurveyState),
    Recursive(RecursiveState),
    Riddles(SequenceState),
    WouldYouRather(SequenceState),
}

impl ActivityState {
    pub fn module(&self) -> ModuleId {
        match self {
            ActivityState::Story(_) => ModuleId::Storytelling,
            ActivityState::Game(g) => g.module(),
            ActivityState::Survey(_) => ModuleId::Survey,
            ActivityState::Recursive(_) => ModuleId::Recursive,
            ActivityState::Riddles(_) => ModuleId::Riddles,
            ActivityState::WouldYouRather(_) => ModuleId::WouldYouRather,
        }
    }

    /// Expectation ids the activity listens for on the next user turn.
    pub fn expectations(&self) -> Vec<String> {
        let ids: &[&str] = match self {
            ActivityState::Story(_) => &["story.continue", "story.question", "story.stop"],
            ActivityState::Game(g) => match g {
                GameState::Nim(_) => &["nim.move"],
                GameState::CityNames(_) => &["cities.city"],
                GameState::Trivia(_) => &["trivia.answer"],
                GameState::FastMoney(_) => &["fast_money.answer"],
                GameState::TextAdventure(_) => &["adventure.action"],
            },
            ActivityState::Survey(_) => &["survey.option"],
            ActivityState::Recursive(_) => &["recursive.more", "recursive.stop"],
            ActivityState::Riddles(s) => match s.phase {
                Phase::Asked => &["riddles.answer"],
                Phase::Reprompt => &["riddles.more", "riddles.stop"],
            },
            ActivityState::WouldYouRather(s) => match s.phase {
                Phase::Asked => &["wyr.choice"],
                Phase::Reprompt => &["wyr.more", "wyr.stop"],
            },
        };
        ids.iter().map(|s| s.to_string()).collect()
    }

    /// Whether the activity survives a turn won by another module, so it
    /// can route the user back. Loops end instead.
    pub fn routes_back(&self) -> bool {
        matches!(
            self,
            ActivityState::Story(_) | ActivityState::Game(_) | ActivityState::Survey(_)
        )
    }

    /// Recursive topic, when this is a fact loop.
    pub fn recursive_topic(&self) -> Option<&str> {
        match self {
            ActivityState::Recursive(r) => Some(&r.topic),
            _ => None,
        }
    }
}

const MORE: &[&str] = &[
    "another", "more", "next", "keep going", "go on", "continue", "go ahead", "what happened",
];
const QUIT: &[&str] = &[
    "no more", "stop playing", "quit", "enough", "i'm done", "something else", "let's stop", "change the subject",
];

fn any_phrase(a: &UtteranceAnalysis, phrases: &[&str]) -> bool {
    phrases.iter().any(|p| contains_phrase(&a.tokens, &tokenize(p)))
}

/// The user asks to carry on.
pub fn wants_more(a: &UtteranceAnalysis) -> bool {
    a.dialogue_act == DialogueAct::YesAnswer || (a.dialogue_act != DialogueAct::NoAnswer && any_phrase(a, MORE))
}

/// The user asks to leave the activity in so many words.
pub fn quits(a: &UtteranceAnalysis) -> bool {
    any_phrase(a, QUIT)
}

/// The user declines to carry on.
pub fn declines(a: &UtteranceAnalysis) -> bool {
    a.dialogue_act == DialogueAct::NoAnswer || quits(a)
}

/// Terminal turn of an activity.
pub fn exit(module: ModuleId, text: &str, base: f64) -> ResponseCandidate {
    ResponseCandidate::new(module, text, base).update(StateUpdate::SetActivity { activity: None })
}

/// Candidates from the activity holding the initiative.
pub fn activity_step(ctx: &ModuleContext, activity: &ActivityState) -> Vec<ResponseCandidate> {
    match activity {
        ActivityState::Story(s) => story::step(ctx, s),
        ActivityState::Game(g) => games::step(ctx, g),
        ActivityState::Survey(s) => survey::step(ctx, s),
        ActivityState::Recursive(r) => recursive::step(ctx, r),
        ActivityState::Riddles(s) => sequences::step_riddles(ctx, s),
        ActivityState::WouldYouRather(s) => sequences::step_wyr(ctx, s),
    }
}

/// Explored-topic key for a target.
pub fn target_topic(t: &Target) -> String {
    match t {
        Target::Story => "stories".into(),
        Target::GameMenu | Target::Game(_) => "games".into(),
        Target::Survey(_) => "surveys".into(),
        Target::Recursive(topic) => format!("{topic}_facts"),
        Target::Riddles => "riddles".into(),
        Target::WouldYouRather => "would_you_rather".into(),
        Target::Flow(id) => id.clone(),
    }
}

/// Spoken name of an activity target for menus.
pub fn target_label(t: &Target, packs: &Packs) -> String {
    match t {
        Target::Story => "stories".into(),
        Target::GameMenu => "games".into(),
        Target::Game(k) => games::MENU
            .iter()
            .find(|(g, _)| g == k)
            .map(|(_, n)| n.to_string())
            .unwrap_or_else(|| "games".into()),
        Target::Survey(id) => packs
            .survey(id)
            .map(|s| format!("a quiz on {}", s.title))
            .unwrap_or_else(|| "a quiz".into()),
        Target::Recursive(topic) => packs
            .fact_topic(topic)
            .map(|f| format!("{} facts", f.label))
            .unwrap_or_else(|| "fun facts".into()),
        Target::Riddles => "riddles".into(),
        Target::WouldYouRather => "would you rather questions".into(),
        Target::Flow(id) => id.replace('_', " "),
    }
}

/// Activities that can appear in menus and topic starters, in a fixed order.
pub fn activity_targets(packs: &Packs) -> Vec<Target> {
    let mut out = vec![Target::GameMenu, Target::Story, Target::WouldYouRather];
    out.extend(packs.fact_topics.iter().map(|f| Target::Recursive(f.topic.clone())));
    out.push(Target::Riddles);
    out.extend(packs.surveys.iter().map(|s| Target::Survey(s.id.clone())));
    out
}

/// A yes/no question proposing `t`, lowercase first so it can follow a hedge.
pub fn offer_text(t: &Target, packs: &Packs) -> String {
    match t {
        Target::Story => "would you like to hear a story?".into(),
        Target::GameMenu => "would you like to play a game?".into(),
        Target::Game(_) => format!("do you want to play {}?", target_label(t, packs)),
        Target::Survey(id) => match packs.survey(id) {
            Some(s) => format!("do you want to take a quiz to find out {}?", s.title),
            None => "do you want to take a quiz?".into(),
        },
        Target::Recursive(_) => format!("do you want to hear some {}?", target_label(t, packs)),
        Target::Riddles => "do you want to hear a riddle?".into(),
        Target::WouldYouRather => "how about I ask you some would you rather questions?".into(),
        Target::Flow(id) => format!("do you want to talk about {}?", id.replace('_', " ")),
    }
}

fn offer_origin(t: &Target) -> ModuleId {
    match t {
        Target::Story => ModuleId::Storytelling,
        Target::GameMenu => ModuleId::Base,
        Target::Game(k) => k.module(),
        Target::Survey(_) => ModuleId::Survey,
        Target::Recursive(_) => ModuleId::Recursive,
        Target::Riddles => ModuleId::Riddles,
        Target::WouldYouRather => ModuleId::WouldYouRather,
        Target::Flow(_) => ModuleId::Flow,
    }
}

/// Offer candidate: asks before starting and remembers what was offered.
pub fn offer(packs: &Packs, t: &Target, prefix: Option<&str>, base: f64) -> ResponseCandidate {
    let question = offer_text(t, packs);
    let text = match prefix {
        Some(p) => format!("{p} {question}"),
        None => capitalize_first(&question),
    };
    let topic = target_topic(t);
    ResponseCandidate::new(offer_origin(t), text, base)
        .prompt(format!("offer.{topic}"))
        .topic(topic)
        .update(StateUpdate::SetOffer { offer: Some(t.clone()) })
        .expecting("offer.accept")
        .expecting("offer.decline")
}

pub fn game_menu(base: f64) -> ResponseCandidate {
    let names: Vec<String> = games::MENU.iter().map(|(_, n)| n.to_string()).collect();
    let text = format!(
        "We can play {}. Which one sounds fun?",
        join_list(&names, "or")
    );
    ResponseCandidate::new(ModuleId::Base, capitalize_first(&text), base)
        .prompt("menu.games")
        .topic("games")
        .expecting("games.choice")
}

/// Starts an activity target. Flow targets are not activities and yield
/// `None`, as does a target whose content is used up.
pub fn start_target(ctx: &ModuleContext, t: &Target, base: f64) -> Option<ResponseCandidate> {
    match t {
        Target::Story => story::start(ctx, base),
        Target::GameMenu => Some(game_menu(base)),
        Target::Game(k) => games::start(ctx, *k, base),
        Target::Survey(id) => survey::start(ctx, id, base),
        Target::Recursive(topic) => recursive::start(ctx, topic, base),
        Target::Riddles => sequences::start_riddles(ctx, base),
        Target::WouldYouRather => sequences::start_wyr(ctx, base),
        Target::Flow(_) => None,
    }
}

const FIXED_TRIGGERS: &[(&str, Target)] = &[
    ("story", Target::Story),
    ("stories", Target::Story),
    ("game", Target::GameMenu),
    ("games", Target::GameMenu),
    ("nim", Target::Game(GameKind::Nim)),
    ("city name game", Target::Game(GameKind::CityNames)),
    ("city game", Target::Game(GameKind::CityNames)),
    ("city names", Target::Game(GameKind::CityNames)),
    ("trivia", Target::Game(GameKind::Trivia)),
    ("jeopardy", Target::Game(GameKind::Trivia)),
    ("fast money", Target::Game(GameKind::FastMoney)),
    ("text adventure", Target::Game(GameKind::TextAdventure)),
    ("adventure", Target::Game(GameKind::TextAdventure)),
    ("riddle", Target::Riddles),
    ("riddles", Target::Riddles),
    ("would you rather", Target::WouldYouRather),
];

/// The activity the user's words point at; the longest matching keyword
/// wins, earlier entries on ties.
pub fn find_trigger(ctx: &ModuleContext) -> Option<Target> {
    let mut keys: Vec<(String, Target)> = FIXED_TRIGGERS
        .iter()
        .map(|(k, t)| (k.to_string(), t.clone()))
        .collect();
    for s in &ctx.packs.surveys {
        keys.extend(s.triggers.iter().map(|k| (k.clone(), Target::Survey(s.id.clone()))));
    }
    for f in &ctx.packs.fact_topics {
        keys.extend(f.keywords.iter().map(|k| (k.clone(), Target::Recursive(f.topic.clone()))));
    }
    let mut best: Option<(usize, Target)> = None;
    for (k, t) in keys {
        let n = tokenize(&k).len();
        if ctx.mentions(&k) && best.as_ref().is_none_or(|(b, _)| n > *b) {
            best = Some((n, t));
        }
    }
    best.map(|(_, t)| t)
}
