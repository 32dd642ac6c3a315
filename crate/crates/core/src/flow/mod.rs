//! Declarative topic flows: graph definitions loaded from TOML, a static
//! validator, and the per-turn interpreter.

mod def;
mod runtime;
mod template;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use def::{
    load_flows, parse_flow, Delegate, DelegateModule, Diagnostic, Edge, FlowDef, FlowNode, FlowSet, NodeAction,
};
pub use runtime::{advance_flow, enter_flow, flow_expectations, follow_edge, trigger_flow, FlowAdvance, FlowError};
pub use template::{render, Template, TemplatePart};

/// Per-session position inside one flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowState {
    pub flow_id: String,
    pub node: String,
    pub visited: BTreeSet<String>,
    pub vars: BTreeMap<String, String>,
    /// Consumed expectations of the current episode.
    #[serde(default)]
    pub consumed: BTreeSet<String>,
}

impl FlowState {
    pub fn new(flow_id: impl Into<String>, node: impl Into<String>) -> Self {
        let node = node.into();
        Self {
            flow_id: flow_id.into(),
            visited: BTreeSet::from([node.clone()]),
            node,
            vars: BTreeMap::new(),
            consumed: BTreeSet::new(),
        }
    }
}
