//! Trivia clues and fast-money survey prompts.

use serde::{Deserialize, Serialize};

use super::super::answer::check_answer;
use super::super::{exit, quits, ActivityState};
use super::GameState;
use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use crate::context::ModuleContext;

pub const ROUND_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriviaClue {
    pub id: String,
    pub clue: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyAnswer {
    pub text: String,
    pub points: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastMoneyPrompt {
    pub id: String,
    pub prompt: String,
    /// Ranked best first.
    pub answers: Vec<SurveyAnswer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizState {
    pub items: Vec<String>,
    pub index: usize,
    /// Correct answers for trivia, points for fast money.
    pub score: u32,
}

fn trivia_key(id: &str) -> String {
    format!("trivia:{id}")
}

fn fast_money_key(id: &str) -> String {
    format!("fast_money:{id}")
}

fn answered(ctx: &ModuleContext, gold: &str) -> bool {
    ctx.analysis.all_texts.iter().any(|t| check_answer(t, gold))
}

fn continuing(game: GameState, module: ModuleId, text: String, used: &str) -> ResponseCandidate {
    ResponseCandidate::new(module, text, 1.0)
        .update(StateUpdate::MarkFactUsed { fact_id: used.to_string() })
        .update(StateUpdate::SetActivity {
            activity: Some(ActivityState::Game(game)),
        })
}

pub fn start_trivia(ctx: &ModuleContext, base: f64) -> Option<ResponseCandidate> {
    let items: Vec<&TriviaClue> = ctx
        .packs
        .trivia
        .iter()
        .filter(|c| !ctx.used(&trivia_key(&c.id)))
        .take(ROUND_LEN)
        .collect();
    let first = items.first()?;
    let text = format!(
        "Let's play trivia! I'll read you {} clues. Here's the first one. {}",
        items.len(),
        first.clue
    );
    let state = QuizState {
        items: items.iter().map(|c| c.id.clone()).collect(),
        index: 0,
        score: 0,
    };
    Some(
        continuing(GameState::Trivia(state), ModuleId::Trivia, text, &trivia_key(&first.id))
            .with_base(base)
            .topic("games")
            .update(StateUpdate::MarkTopicExplored { topic: "games".into() }),
    )
}

pub fn step_trivia(ctx: &ModuleContext, state: &QuizState) -> Vec<ResponseCandidate> {
    let module = ModuleId::Trivia;
    let find = |id: &str| ctx.packs.trivia.iter().find(|c| c.id == id);
    let Some(clue) = state.items.get(state.index).and_then(|id| find(id)) else {
        return vec![exit(module, "That's the end of trivia. What would you like to talk about?", 1.0)];
    };
    if quits(ctx.analysis) {
        return vec![exit(module, "Okay, we can stop trivia here. What would you like to talk about?", 1.0)];
    }
    let mut next = state.clone();
    let verdict = if answered(ctx, &clue.answer) {
        next.score += 1;
        "That's right!".to_string()
    } else {
        format!("Not quite. The answer was {}.", clue.answer)
    };
    next.index += 1;
    match next.items.get(next.index).and_then(|id| find(id)) {
        Some(c) => {
            let text = format!("{verdict} Next clue. {}", c.clue);
            let key = trivia_key(&c.id);
            vec![continuing(GameState::Trivia(next), module, text, &key)]
        }
        None => vec![exit(
            module,
            &format!(
                "{verdict} You got {} out of {}. Thanks for playing trivia!",
                next.score,
                next.items.len()
            ),
            1.0,
        )],
    }
}

pub fn start_fast_money(ctx: &ModuleContext, base: f64) -> Option<ResponseCandidate> {
    let items: Vec<&FastMoneyPrompt> = ctx
        .packs
        .fast_money
        .iter()
        .filter(|p| !ctx.used(&fast_money_key(&p.id)))
        .take(ROUND_LEN)
        .collect();
    let first = items.first()?;
    let text = format!(
        "Let's play fast money! I'll give you {} survey questions, and you name the most popular answer you can. First one. {}",
        items.len(),
        first.prompt
    );
    let state = QuizState {
        items: items.iter().map(|p| p.id.clone()).collect(),
        index: 0,
        score: 0,
    };
    Some(
        continuing(GameState::FastMoney(state), ModuleId::FastMoney, text, &fast_money_key(&first.id))
            .with_base(base)
            .topic("games")
            .update(StateUpdate::MarkTopicExplored { topic: "games".into() }),
    )
}

pub fn step_fast_money(ctx: &ModuleContext, state: &QuizState) -> Vec<ResponseCandidate> {
    let module = ModuleId::FastMoney;
    let find = |id: &str| ctx.packs.fast_money.iter().find(|p| p.id == id);
    let Some(prompt) = state.items.get(state.index).and_then(|id| find(id)) else {
        return vec![exit(module, "That's the end of fast money. What would you like to talk about?", 1.0)];
    };
    if quits(ctx.analysis) {
        return vec![exit(module, "Okay, we can stop here. What would you like to talk about?", 1.0)];
    }
    let mut next = state.clone();
    let hit = prompt
        .answers
        .iter()
        .filter(|a| answered(ctx, &a.text))
        .max_by_key(|a| a.points);
    let verdict = match hit {
        Some(a) => {
            next.score += a.points;
            format!("Survey says {}! That's {} points.", a.text, a.points)
        }
        None => match prompt.answers.first() {
            Some(top) => format!("Survey says no. The top answer was {}.", top.text),
            None => "Survey says no.".to_string(),
        },
    };
    next.index += 1;
    match next.items.get(next.index).and_then(|id| find(id)) {
        Some(p) => {
            let text = format!("{verdict} Next one. {}", p.prompt);
            let key = fast_money_key(&p.id);
            vec![continuing(GameState::FastMoney(next), module, text, &key)]
        }
        None => vec![exit(
            module,
            &format!("{verdict} You finished with {} points. Thanks for playing fast money!", next.score),
            1.0,
        )],
    }
}
