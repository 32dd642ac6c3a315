//! Shared fixtures for the integration suites and the acceptance runner.

#![allow(dead_code)]

pub mod criteria;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use parlor_core::config::{build_engine, AppConfig};
use parlor_core::context::ModuleContext;
use parlor_core::memory::LtmStore;
use parlor_core::nlu::UtteranceAnalysis;
use parlor_core::service::Service;
use parlor_core::{Engine, SessionState};
use tempfile::TempDir;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn data_dir() -> PathBuf {
    repo_root().join("data")
}

pub fn fixtures_dir() -> PathBuf {
    repo_root().join("crates/core/tests/fixtures")
}

pub fn config_at(state_dir: &Path) -> AppConfig {
    AppConfig {
        data_dir: data_dir(),
        state_dir: state_dir.to_path_buf(),
        ..AppConfig::default()
    }
}

/// An engine over the shipped data with LTM in a private temp dir.
pub struct Fixture {
    pub engine: Arc<Engine>,
    pub store: Arc<LtmStore>,
    pub dir: TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().expect("temp dir");
        let (engine, store) = build_engine(&config_at(dir.path())).expect("engine builds");
        Self {
            engine: Arc::new(engine),
            store: Arc::new(store),
            dir,
        }
    }

    pub fn service(&self) -> Service {
        Service::new(self.engine.clone(), self.store.clone())
    }
}

impl Default for Fixture {
    fn default() -> Self {
        Self::new()
    }
}

pub fn module_ctx<'a>(engine: &'a Engine, analysis: &'a UtteranceAnalysis, session: &'a SessionState) -> ModuleContext<'a> {
    ModuleContext {
        analysis,
        session,
        packs: &engine.packs,
        analyzer: &engine.analyzer,
        story_window: engine.config.story_window,
    }
}
