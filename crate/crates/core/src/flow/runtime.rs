//! Flow interpretation: triggering, entry, edge scanning and delegation.

use super::def::{DelegateModule, FlowDef, FlowSet, NodeAction};
use super::template::render;
use super::FlowState;
use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use crate::context::ModuleContext;
use crate::expectation::{match_expectation, FunctionRegistry};

#[derive(Debug, Clone, PartialEq)]
pub enum FlowAdvance {
    Emit(ResponseCandidate),
    Exit,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error("unknown flow `{0}`")]
    UnknownFlow(String),
    #[error("flow `{flow}` has no node `{node}`")]
    UnknownNode { flow: String, node: String },
    #[error("flow `{flow}` node `{node}` renders unbound variable `{var}`")]
    UnboundVar { flow: String, node: String, var: String },
}

pub const TRIGGER_CONFIDENCE: f64 = 1.0;
pub const ADJACENT_CONFIDENCE: f64 = 0.6;

fn delegate_candidate(ctx: &ModuleContext, module: DelegateModule, args: &std::collections::BTreeMap<String, String>) -> Option<ResponseCandidate> {
    let arg = |k: &str| args.get(k).map(String::as_str).unwrap_or_default();
    match module {
        DelegateModule::Recursive => crate::system::recursive::start(ctx, arg("topic"), 1.0),
        DelegateModule::Survey => crate::system::survey::start(ctx, arg("survey"), 1.0),
        DelegateModule::Opinions => {
            let o = ctx.session.agent_profile.get(arg("entity"))?;
            Some(ResponseCandidate::new(ModuleId::Flow, format!("{} {}", o.statement, o.justification), 1.0))
        }
        DelegateModule::QuestionAnswering => crate::mixed::qa::search_answer(ctx),
    }
}

/// Moves to `node_id` and builds the candidate for its action.
fn emit(ctx: &ModuleContext, def: &FlowDef, mut state: FlowState, node_id: &str, base: f64) -> Result<ResponseCandidate, FlowError> {
    let node = def.node(node_id).ok_or_else(|| FlowError::UnknownNode {
        flow: def.id.clone(),
        node: node_id.to_string(),
    })?;
    let unbound = |var: String| FlowError::UnboundVar {
        flow: def.id.clone(),
        node: node_id.to_string(),
        var,
    };
    let vars = state.vars.clone();
    state.node = node_id.to_string();
    state.visited.insert(node_id.to_string());

    let mut delegated: Option<ResponseCandidate> = None;
    let text = match &node.action {
        NodeAction::Say(t) => Some(render(t, &vars).map_err(unbound)?),
        NodeAction::Delegate(d) => match delegate_candidate(ctx, d.module, &d.args) {
            Some(c) => {
                delegated = Some(c);
                None
            }
            None => match &d.fallback {
                Some(t) => Some(render(t, &vars).map_err(unbound)?),
                None => None,
            },
        },
    };

    let terminal = node.edges.is_empty();
    let mut c = match (&delegated, text) {
        (Some(d), _) => {
            let mut c = ResponseCandidate::new(d.origin, d.text.clone(), base);
            c.ssml_pauses = d.ssml_pauses.clone();
            c.expects = d.expects.clone();
            c
        }
        (None, Some(text)) => ResponseCandidate::new(ModuleId::Flow, text, base),
        (None, None) => ResponseCandidate::new(
            ModuleId::Flow,
            format!("That's all I have to say about {} for now.", def.title),
            base,
        ),
    };
    c.id = format!("flow:{}:{}", def.id, node_id);
    c = c
        .prompt(format!("flow.{}.{}", def.id, node_id))
        .topic(def.topic.clone())
        .update(StateUpdate::SetFlow { flow: Some(state) })
        .updates(node.postconditions.iter().cloned());
    let starts_activity = match delegated {
        Some(d) => {
            let starts = d.next_activity().is_some_and(Option::is_some);
            c = c.updates(d.postconditions);
            starts
        }
        None => false,
    };
    if terminal && !starts_activity {
        c = c.update(StateUpdate::SetFlow { flow: None });
    }
    Ok(c)
}

/// Entry candidate for `def` at its first unvisited subroot, or `None` when
/// every subroot was already visited this session.
pub fn enter_flow(ctx: &ModuleContext, def: &FlowDef, base: f64) -> Result<Option<ResponseCandidate>, FlowError> {
    let remembered = ctx.session.flow_memory.get(&def.id);
    let Some(subroot) = def
        .subroots
        .iter()
        .find(|s| remembered.is_none_or(|m| !m.visited.contains(*s)))
    else {
        return Ok(None);
    };
    let mut state = remembered.cloned().unwrap_or_else(|| FlowState::new(&def.id, subroot));
    state.consumed.clear();
    let mut c = emit(ctx, def, state, subroot, base)?;
    let mut head = vec![
        StateUpdate::FlowPrompted { flow_id: def.id.clone() },
        StateUpdate::MarkTopicExplored { topic: def.id.clone() },
    ];
    if def.topic != def.id {
        head.push(StateUpdate::MarkTopicExplored { topic: def.topic.clone() });
    }
    c.postconditions.splice(0..0, head);
    Ok(Some(c))
}

/// Entry candidates for flows the user's turn points at: a trigger keyword
/// on any hypothesis scores 1.0, a matching or adjacent topic 0.6.
pub fn trigger_flow(ctx: &ModuleContext, flows: &FlowSet) -> Result<Vec<ResponseCandidate>, FlowError> {
    let active = ctx.session.active_flow.as_ref().map(|f| f.flow_id.as_str());
    let mut out = Vec::new();
    for def in flows.iter().filter(|d| Some(d.id.as_str()) != active) {
        let base = if def.triggers.iter().any(|k| ctx.mentions(k)) {
            TRIGGER_CONFIDENCE
        } else if ctx
            .analysis
            .topic
            .as_ref()
            .is_some_and(|t| *t == def.topic || def.adjacent_topics.contains(t))
        {
            ADJACENT_CONFIDENCE
        } else {
            continue;
        };
        out.extend(enter_flow(ctx, def, base)?);
    }
    Ok(out)
}

/// Moves along `edge`'s target from `state`, as when its expectation matched.
pub fn follow_edge(ctx: &ModuleContext, def: &FlowDef, state: &FlowState, edge: usize) -> Result<ResponseCandidate, FlowError> {
    let node = def.node(&state.node).ok_or_else(|| FlowError::UnknownNode {
        flow: def.id.clone(),
        node: state.node.clone(),
    })?;
    let e = &node.edges[edge];
    let mut next = state.clone();
    if def.expectations.get(&e.when).is_some_and(|x| x.consume) {
        next.consumed.insert(e.when.clone());
    }
    emit(ctx, def, next, &e.to, 1.0)
}

/// First edge of the current node whose expectation matches, in declared
/// order; no match exits the flow.
pub fn advance_flow(
    ctx: &ModuleContext,
    flows: &FlowSet,
    registry: &FunctionRegistry,
    state: &FlowState,
) -> Result<FlowAdvance, FlowError> {
    let def = flows.get(&state.flow_id).ok_or_else(|| FlowError::UnknownFlow(state.flow_id.clone()))?;
    let node = def.node(&state.node).ok_or_else(|| FlowError::UnknownNode {
        flow: def.id.clone(),
        node: state.node.clone(),
    })?;
    for (i, e) in node.edges.iter().enumerate() {
        if state.consumed.contains(&e.when) {
            continue;
        }
        let Some(exp) = def.expectations.get(&e.when) else {
            continue;
        };
        if match_expectation(exp, ctx.analysis, ctx.session, registry) {
            return follow_edge(ctx, def, state, i).map(FlowAdvance::Emit);
        }
    }
    Ok(FlowAdvance::Exit)
}

/// Expectation ids on the current node's live edges, in edge order.
pub fn flow_expectations(flows: &FlowSet, state: &FlowState) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let Some(node) = flows.get(&state.flow_id).and_then(|d| d.node(&state.node)) else {
        return out;
    };
    for e in &node.edges {
        if !state.consumed.contains(&e.when) && !out.contains(&e.when) {
            out.push(e.when.clone());
        }
    }
    out
}
