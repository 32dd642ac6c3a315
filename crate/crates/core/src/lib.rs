//! Open-domain socialbot engine.
//!
//! A user turn is analyzed ([`nlu`]), priority intents are handled, and
//! every module contributes candidates: mixed-initiative responders
//! ([`mixed`]), system-initiative activities ([`system`]) and declarative
//! topic flows ([`flow`]). Candidates are reranked ([`scoring`]), the winner
//! is polished ([`realization`]) and its effects are applied to the session
//! ([`memory`]).

pub mod candidate;
pub mod config;
pub mod context;
pub mod engine;
pub mod expectation;
pub mod flow;
pub mod memory;
pub mod metrics;
pub mod mixed;
pub mod nlu;
pub mod packs;
pub mod realization;
pub mod replay;
pub mod scoring;
pub mod service;
pub mod system;
pub mod text;

pub use candidate::{ModuleId, ResponseCandidate, StateUpdate, Target};
pub use engine::{Engine, EngineConfig, TurnResult};
pub use memory::SessionState;
pub use nlu::{AsrHypothesis, AsrInput};
