//! Turn-based games.

pub mod adventure;
pub mod cities;
pub mod nim;
pub mod quiz;

use serde::{Deserialize, Serialize};

use crate::candidate::{GameKind, ModuleId, ResponseCandidate};
use crate::context::ModuleContext;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "game")]
pub enum GameState {
    Nim(nim::NimState),
    CityNames(cities::CityState),
    Trivia(quiz::QuizState),
    FastMoney(quiz::QuizState),
    TextAdventure(adventure::AdventureState),
}

impl GameState {
    pub fn kind(&self) -> GameKind {
        match self {
            GameState::Nim(_) => GameKind::Nim,
            GameState::CityNames(_) => GameKind::CityNames,
            GameState::Trivia(_) => GameKind::Trivia,
            GameState::FastMoney(_) => GameKind::FastMoney,
            GameState::TextAdventure(_) => GameKind::TextAdventure,
        }
    }

    pub fn module(&self) -> ModuleId {
        self.kind().module()
    }
}

pub fn start(ctx: &ModuleContext, kind: GameKind, base: f64) -> Option<ResponseCandidate> {
    match kind {
        GameKind::Nim => Some(nim::start(base)),
        GameKind::CityNames => cities::start(ctx, base),
        GameKind::Trivia => quiz::start_trivia(ctx, base),
        GameKind::FastMoney => quiz::start_fast_money(ctx, base),
        GameKind::TextAdventure => adventure::start(ctx, base),
    }
}

pub fn step(ctx: &ModuleContext, game: &GameState) -> Vec<ResponseCandidate> {
    match game {
        GameState::Nim(s) => nim::step(ctx, s),
        GameState::CityNames(s) => cities::step(ctx, s),
        GameState::Trivia(s) => quiz::step_trivia(ctx, s),
        GameState::FastMoney(s) => quiz::step_fast_money(ctx, s),
        GameState::TextAdventure(s) => adventure::step(ctx, s),
    }
}

/// Spoken names, in menu order.
pub const MENU: [(GameKind, &str); 5] = [
    (GameKind::Nim, "Nim"),
    (GameKind::CityNames, "the city name game"),
    (GameKind::Trivia, "trivia"),
    (GameKind::FastMoney, "fast money"),
    (GameKind::TextAdventure, "a text adventure"),
];
