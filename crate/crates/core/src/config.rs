//! Runtime configuration and engine assembly from a data directory.
//!
//! Settings come from an optional TOML file, then `PARLOR_DATA_DIR`,
//! `PARLOR_STATE_DIR` and `PARLOR_PORT` override the file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{Engine, EngineConfig};
use crate::expectation::FunctionRegistry;
use crate::flow::{load_flows, Diagnostic};
use crate::memory::{LtmError, LtmStore};
use crate::mixed::retrieval::RetrievalConfig;
use crate::nlu::{Analyzer, Lexicon, LexiconError, NluConfig};
use crate::packs::{seed_ltm, PackError, Packs};
use crate::realization::OpenerTable;
use crate::scoring::ContentFilter;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid {var}: {value:?}")]
    Env { var: &'static str, value: String },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("{} flow diagnostic(s), first: {}", .0.len(), .0.first().map(ToString::to_string).unwrap_or_default())]
    Flows(Vec<Diagnostic>),
    #[error(transparent)]
    Ltm(#[from] LtmError),
    #[error(transparent)]
    Packs(#[from] PackError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    /// Lexicon, flows, packs, openers and filter list.
    pub data_dir: PathBuf,
    /// LTM records and turn logs.
    pub state_dir: PathBuf,
    pub host: String,
    pub port: u16,
    /// Sessions idle this long are ended and migrated to LTM.
    pub idle_timeout_secs: u64,
    pub nlu: NluConfig,
    pub engine: EngineConfig,
    pub retrieval: RetrievalConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            state_dir: PathBuf::from("state"),
            host: "127.0.0.1".into(),
            port: 8080,
            idle_timeout_secs: 600,
            nlu: NluConfig::default(),
            engine: EngineConfig::default(),
            retrieval: RetrievalConfig::default(),
        }
    }
}

impl AppConfig {
    pub fn from_toml_str(src: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(src).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads `path` when given, else defaults, then applies the environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => {
                let src = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml_str(&src, p)?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = get("PARLOR_DATA_DIR") {
            self.data_dir = PathBuf::from(v);
        }
        if let Some(v) = get("PARLOR_STATE_DIR") {
            self.state_dir = PathBuf::from(v);
        }
        if let Some(v) = get("PARLOR_PORT") {
            self.port = v.parse().map_err(|_| ConfigError::Env {
                var: "PARLOR_PORT",
                value: v.clone(),
            })?;
        }
        Ok(())
    }

    pub fn ltm_dir(&self) -> PathBuf {
        self.state_dir.join("ltm")
    }

    pub fn log_dir(&self) -> PathBuf {
        self.state_dir.join("logs")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ConfigError + '_ {
    move |source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_analyzer(data_dir: &Path, nlu: NluConfig) -> Result<Analyzer, ConfigError> {
    let lexicon = Lexicon::load(&data_dir.join("nlu"))?;
    Ok(Analyzer::new(Arc::new(lexicon), nlu))
}

/// Opens LTM under the state dir, refreshes corpora from `data/packs`, then
/// assembles the engine. Corpora are read from LTM exactly once here.
pub fn build_engine(cfg: &AppConfig) -> Result<(Engine, LtmStore), ConfigError> {
    let analyzer = load_analyzer(&cfg.data_dir, cfg.nlu)?;
    let registry = FunctionRegistry::builtin();
    let flows = load_flows(&cfg.data_dir.join("flows"), &registry).map_err(ConfigError::Flows)?;

    let store = LtmStore::open_default(cfg.ltm_dir())?;
    let written = seed_ltm(&store, &cfg.data_dir.join("packs"))?;
    log::info!("seeded {written} corpus record(s) into {}", store.root().display());
    let packs = Packs::load(&store, &analyzer, cfg.retrieval)?;

    let openers_path = cfg.data_dir.join("openers.tsv");
    let openers = OpenerTable::load(&openers_path).map_err(io_err(&openers_path))?;
    let filter_path = cfg.data_dir.join("filter.txt");
    let filter = ContentFilter::load(&filter_path).map_err(io_err(&filter_path))?;

    let engine = Engine {
        analyzer,
        packs,
        flows,
        registry,
        openers,
        filter,
        config: cfg.engine,
    };
    Ok((engine, store))
}
