//! Front ends for the parlor engine: the `/v1` HTTP API, the console REPL
//! and the helpers the `parlor` binary shares with tests.

pub mod api;
pub mod repl;

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use parlor_core::config::{build_engine, AppConfig};
use parlor_core::flow::{load_flows, parse_flow, Diagnostic};
use parlor_core::expectation::FunctionRegistry;
use parlor_core::service::Service;

/// Builds the engine from `cfg` and wraps it in a service that logs turns
/// under the state dir.
pub fn build_service(cfg: &AppConfig) -> anyhow::Result<Service> {
    let (engine, store) = build_engine(cfg)?;
    Ok(Service::new(Arc::new(engine), Arc::new(store))
        .with_log_dir(cfg.log_dir())
        .with_idle_timeout(Duration::from_secs(cfg.idle_timeout_secs)))
}

/// Validates a flow file or every flow in a directory.
pub fn validate_flows(path: &Path) -> Vec<Diagnostic> {
    let registry = FunctionRegistry::builtin();
    if path.is_dir() {
        return load_flows(path, &registry).err().unwrap_or_default();
    }
    let file = path.display().to_string();
    match std::fs::read_to_string(path) {
        Ok(src) => parse_flow(&file, &src, &registry).err().unwrap_or_default(),
        Err(e) => vec![Diagnostic {
            file,
            line: 0,
            rule: "io-error".into(),
            message: e.to_string(),
        }],
    }
}
