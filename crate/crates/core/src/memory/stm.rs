use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use super::SessionState;

/// A live session plus the time it last saw a turn.
#[derive(Debug)]
pub struct SessionSlot {
    pub state: SessionState,
    pub last_active: Instant,
}

/// In-memory STM for all live sessions. Each session sits behind its own
/// lock so distinct sessions never contend; callers that want conflict
/// errors instead of waiting use `try_lock` on the slot.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionSlot>>>>,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, state: SessionState) {
        let id = state.session_id.clone();
        let slot = Arc::new(Mutex::new(SessionSlot {
            state,
            last_active: Instant::now(),
        }));
        self.sessions.lock().expect("session map poisoned").insert(id, slot);
    }

    pub fn get(&self, id: &str) -> Option<Arc<Mutex<SessionSlot>>> {
        self.sessions.lock().expect("session map poisoned").get(id).cloned()
    }

    pub fn remove(&self, id: &str) -> Option<Arc<Mutex<SessionSlot>>> {
        self.sessions.lock().expect("session map poisoned").remove(id)
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.lock().expect("session map poisoned").keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().expect("session map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
