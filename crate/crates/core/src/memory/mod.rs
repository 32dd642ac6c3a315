//! Short-term (per-session) and long-term (persistent) memory.
//!
//! STM is the in-process [`SessionState`] held by a [`SessionStore`]; LTM is
//! the file-backed [`LtmStore`]. Data moves from STM to LTM only when a
//! session ends; corpora are read from LTM once at startup.

mod ltm;
mod session;
mod stm;

pub use ltm::{canonical_json, LtmError, LtmRecord, LtmStore};
pub use session::{Counters, HistoryEntry, SessionState, Speaker, TurnEvent};
pub use stm::{SessionSlot, SessionStore};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MemoryError {
    #[error("event for session {event} applied to session {session}")]
    SessionMismatch { session: String, event: String },
}
