//! Session lifecycle shared by the HTTP gateway, the REPL and replays.
//!
//! LTM is read only when a session opens (to restore the user's profile) and
//! written only when it ends. Turns touch STM alone.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::candidate::{ModuleId, StateUpdate};
use crate::engine::{Engine, EngineError, TurnResult};
use crate::memory::{LtmError, LtmRecord, LtmStore, SessionState, SessionStore};
use crate::mixed::opinions::OpinionProfile;
use crate::nlu::AsrInput;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("session `{0}` already exists")]
    Exists(String),
    #[error("session `{0}` is processing another turn")]
    Busy(String),
    #[error("session `{0}` has ended")]
    Closed(String),
    #[error(transparent)]
    Engine(EngineError),
    #[error(transparent)]
    Ltm(#[from] LtmError),
    #[error("stored profile for `{user}` is unreadable: {source}")]
    Profile {
        user: String,
        #[source]
        source: serde_json::Error,
    },
}

impl From<EngineError> for ServiceError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Closed(id) => ServiceError::Closed(id),
            other => ServiceError::Engine(other),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpenRequest {
    pub session_id: Option<String>,
    pub user_id: Option<String>,
    pub seed: Option<u64>,
}

/// What LTM keeps about a user between sessions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoredProfile {
    pub user_id: String,
    pub user_name: Option<String>,
    pub profile: OpinionProfile,
    pub explored_topics: BTreeSet<String>,
}

/// One line of a session's JSONL turn log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnLogRecord {
    pub session_id: String,
    pub turn: u64,
    pub user: String,
    pub reply: String,
    pub origin: ModuleId,
    pub module_before: Option<ModuleId>,
    pub module_after: Option<ModuleId>,
    pub flow_before: Option<String>,
    pub flow_after: Option<String>,
    pub flow_prompted: Option<String>,
    /// Fact topic of the recursion running after this turn.
    pub recursive_topic: Option<String>,
    pub priority: Option<String>,
    pub expectations: Vec<String>,
    pub end_session: bool,
}

impl TurnLogRecord {
    pub fn from_turn(before: &SessionState, r: &TurnResult) -> Self {
        let after = &r.new_state;
        Self {
            session_id: after.session_id.clone(),
            turn: after.turn_count,
            user: r.trace.analysis.primary_text.clone(),
            reply: r.reply.clone(),
            origin: r.response.origin,
            module_before: before.active_module,
            module_after: after.active_module,
            flow_before: before.active_flow.as_ref().map(|f| f.flow_id.clone()),
            flow_after: after.active_flow.as_ref().map(|f| f.flow_id.clone()),
            flow_prompted: r.response.postconditions.iter().find_map(|u| match u {
                StateUpdate::FlowPrompted { flow_id } => Some(flow_id.clone()),
                _ => None,
            }),
            recursive_topic: after.activity.as_ref().and_then(|a| a.recursive_topic()).map(str::to_string),
            priority: r.trace.priority.clone(),
            expectations: r.expectations.clone(),
            end_session: r.end_session,
        }
    }
}

pub struct Service {
    engine: Arc<Engine>,
    store: Arc<LtmStore>,
    sessions: SessionStore,
    migrated: Mutex<BTreeSet<String>>,
    next_id: AtomicU64,
    log_dir: Option<PathBuf>,
    idle_timeout: Duration,
}

impl Service {
    pub fn new(engine: Arc<Engine>, store: Arc<LtmStore>) -> Self {
        Self {
            engine,
            store,
            sessions: SessionStore::new(),
            migrated: Mutex::new(BTreeSet::new()),
            next_id: AtomicU64::new(1),
            log_dir: None,
            idle_timeout: Duration::from_secs(600),
        }
    }

    pub fn with_log_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.log_dir = Some(dir.into());
        self
    }

    pub fn with_idle_timeout(mut self, timeout: Duration) -> Self {
        self.idle_timeout = timeout;
        self
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn store(&self) -> &LtmStore {
        &self.store
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.ids()
    }

    fn profile_record(&self, user_id: &str) -> Result<Option<StoredProfile>, ServiceError> {
        let Some(rec) = self.store.get("user_profiles", user_id)? else {
            return Ok(None);
        };
        serde_json::from_value(rec.payload).map(Some).map_err(|source| ServiceError::Profile {
            user: user_id.to_string(),
            source,
        })
    }

    /// Creates a session, restoring the user's stored profile or seeding a
    /// fresh one.
    pub fn open_session(&self, req: OpenRequest) -> Result<SessionState, ServiceError> {
        let n = self.next_id.fetch_add(1, Ordering::SeqCst);
        let id = req.session_id.unwrap_or_else(|| format!("s{n:06}"));
        if self.sessions.get(&id).is_some() {
            return Err(ServiceError::Exists(id));
        }
        let seed = req.seed.unwrap_or_else(rand::random);
        let mut state = SessionState::new(&id, seed);
        state.user_id = req.user_id.clone();

        let stored = match &req.user_id {
            Some(u) => self.profile_record(u)?,
            None => None,
        };
        match stored {
            Some(p) if p.profile.seeded => {
                state.agent_profile = p.profile;
                state.user_name = p.user_name;
                state.explored_topics = p.explored_topics;
            }
            _ => {
                state.agent_profile = OpinionProfile::seed(&self.engine.packs.opinions, req.user_id.as_deref(), seed);
            }
        }
        self.sessions.insert(state.clone());
        Ok(state)
    }

    pub fn get_state(&self, id: &str) -> Result<SessionState, ServiceError> {
        let slot = self.sessions.get(id).ok_or_else(|| ServiceError::NotFound(id.to_string()))?;
        let guard = slot.lock().expect("session slot poisoned");
        Ok(guard.state.clone())
    }

    /// Runs one turn. A session already mid-turn yields `Busy` rather than
    /// queueing.
    pub fn turn(&self, id: &str, input: &AsrInput) -> Result<TurnResult, ServiceError> {
        let slot = self.sessions.get(id).ok_or_else(|| ServiceError::NotFound(id.to_string()))?;
        let mut guard = match slot.try_lock() {
            Ok(g) => g,
            Err(std::sync::TryLockError::WouldBlock) => return Err(ServiceError::Busy(id.to_string())),
            Err(std::sync::TryLockError::Poisoned(p)) => p.into_inner(),
        };
        if guard.state.closed {
            return Err(ServiceError::Closed(id.to_string()));
        }
        let result = self.engine.process_turn(&guard.state, input)?;
        let record = TurnLogRecord::from_turn(&guard.state, &result);
        guard.state = result.new_state.clone();
        guard.last_active = Instant::now();
        self.append_log(&record);
        if result.end_session {
            self.migrate(&guard.state)?;
        }
        Ok(result)
    }

    fn append_log(&self, record: &TurnLogRecord) {
        let Some(dir) = &self.log_dir else {
            return;
        };
        let write = || -> std::io::Result<()> {
            std::fs::create_dir_all(dir)?;
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(dir.join(format!("{}.jsonl", record.session_id)))?;
            let line = serde_json::to_string(record).map_err(std::io::Error::other)?;
            writeln!(f, "{line}")
        };
        if let Err(e) = write() {
            log::warn!("turn log for {}: {e}", record.session_id);
        }
    }

    /// Copies what outlives the session into LTM. Runs at most once per
    /// session id.
    fn migrate(&self, state: &SessionState) -> Result<(), ServiceError> {
        if !self.migrated.lock().expect("migrated set poisoned").insert(state.session_id.clone()) {
            return Ok(());
        }
        if let Some(user) = &state.user_id {
            let profile = StoredProfile {
                user_id: user.clone(),
                user_name: state.user_name.clone(),
                profile: state.agent_profile.clone(),
                explored_topics: state.explored_topics.clone(),
            };
            let payload = serde_json::to_value(&profile).expect("profiles serialize");
            self.store.put(&LtmRecord::new("user_profiles", user.clone(), payload))?;
        }
        let mut modules: BTreeMap<String, u32> = BTreeMap::new();
        for h in state.history.iter().filter_map(|h| h.origin) {
            *modules.entry(h.as_str().to_string()).or_default() += 1;
        }
        let summary = json!({
            "session_id": state.session_id,
            "user_id": state.user_id,
            "turn_count": state.turn_count,
            "explored_topics": state.explored_topics,
            "modules": modules,
        });
        self.store.put(&LtmRecord::new("session_summaries", state.session_id.clone(), summary))?;
        Ok(())
    }

    /// Ends a session and drops it from STM. Ending twice is harmless; the
    /// second call reports `NotFound`.
    pub fn end_session(&self, id: &str) -> Result<SessionState, ServiceError> {
        let slot = self.sessions.remove(id).ok_or_else(|| ServiceError::NotFound(id.to_string()))?;
        let mut guard = slot.lock().expect("session slot poisoned");
        guard.state.closed = true;
        self.migrate(&guard.state)?;
        Ok(guard.state.clone())
    }

    /// Ends every session idle longer than the timeout, as of `now`.
    pub fn expire_idle(&self, now: Instant) -> Vec<String> {
        let mut ended = Vec::new();
        for id in self.sessions.ids() {
            let Some(slot) = self.sessions.get(&id) else {
                continue;
            };
            let idle = match slot.try_lock() {
                Ok(g) => now.saturating_duration_since(g.last_active) >= self.idle_timeout,
                Err(_) => false,
            };
            if idle {
                match self.end_session(&id) {
                    Ok(_) => ended.push(id),
                    Err(e) => log::warn!("expiring {id}: {e}"),
                }
            }
        }
        ended
    }
}
