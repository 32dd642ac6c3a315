//! Flow documents and their static checks.
//!
//! A flow file is a TOML document:
//!
//! ```toml
//! id = "books"
//! topic = "books"
//! title = "books"
//! adjacent_topics = ["movies"]
//! triggers = ["books", "reading"]
//! subroots = ["genre"]
//!
//! [[expectation]]
//! id = "mystery"
//! kind = "keyword_set"          # keyword_set | dialogue_act | sentiment_range | predicate
//! words = ["mystery", "detective"]
//!
//! [[node]]
//! id = "genre"
//! say = "What kind of books do you like?"
//! postconditions = [{ op = "call_function", name = "remember_topic" }]
//! edges = [{ when = "mystery", to = "mystery" }]
//! ```
//!
//! Every rule violation is reported with the file, line and a stable rule id.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use super::template::Template;
use crate::candidate::StateUpdate;
use crate::expectation::{Expectation, ExpectationError, FunctionRegistry, KeywordMode, Matcher};
use crate::nlu::DialogueAct;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: usize,
    pub rule: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: [{}] {}", self.file, self.line, self.rule, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelegateModule {
    Recursive,
    Survey,
    Opinions,
    QuestionAnswering,
}

impl DelegateModule {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "recursive" => Self::Recursive,
            "survey" => Self::Survey,
            "opinions" => Self::Opinions,
            "question_answering" => Self::QuestionAnswering,
            _ => return None,
        })
    }

    fn required_args(self) -> &'static [&'static str] {
        match self {
            Self::Recursive => &["topic"],
            Self::Survey => &["survey"],
            Self::Opinions => &["entity"],
            Self::QuestionAnswering => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delegate {
    pub module: DelegateModule,
    pub args: BTreeMap<String, String>,
    /// Said when the delegate has nothing to offer.
    pub fallback: Option<Template>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeAction {
    Say(Template),
    Delegate(Delegate),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    /// Expectation id.
    pub when: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowNode {
    pub id: String,
    pub action: NodeAction,
    pub postconditions: Vec<StateUpdate>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDef {
    pub id: String,
    pub topic: String,
    pub title: String,
    pub adjacent_topics: Vec<String>,
    pub triggers: Vec<String>,
    pub subroots: Vec<String>,
    pub nodes: BTreeMap<String, FlowNode>,
    pub expectations: BTreeMap<String, Expectation>,
}

impl FlowDef {
    pub fn node(&self, id: &str) -> Option<&FlowNode> {
        self.nodes.get(id)
    }
}

/// Immutable set of validated flows, keyed by id.
#[derive(Debug, Clone, Default)]
pub struct FlowSet {
    flows: BTreeMap<String, FlowDef>,
}

impl FlowSet {
    pub fn new(flows: impl IntoIterator<Item = FlowDef>) -> Self {
        Self {
            flows: flows.into_iter().map(|f| (f.id.clone(), f)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&FlowDef> {
        self.flows.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FlowDef> {
        self.flows.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.flows.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    id: Spanned<String>,
    topic: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    adjacent_topics: Vec<String>,
    #[serde(default)]
    triggers: Vec<String>,
    #[serde(default)]
    subroots: Vec<Spanned<String>>,
    #[serde(default, rename = "expectation")]
    expectations: Vec<RawExpectation>,
    #[serde(default, rename = "node")]
    nodes: Vec<RawNode>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpectation {
    id: Spanned<String>,
    kind: String,
    #[serde(default)]
    words: Option<Vec<String>>,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    act: Option<String>,
    #[serde(default)]
    lo: Option<f64>,
    #[serde(default)]
    hi: Option<f64>,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    consume: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: Spanned<String>,
    #[serde(default)]
    say: Option<Spanned<String>>,
    #[serde(default)]
    delegate: Option<RawDelegate>,
    #[serde(default)]
    postconditions: Vec<RawPost>,
    #[serde(default, alias = "edge")]
    edges: Vec<RawEdge>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelegate {
    module: Spanned<String>,
    #[serde(default)]
    args: BTreeMap<String, String>,
    #[serde(default)]
    fallback: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPost {
    op: Spanned<String>,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    value: Option<String>,
    #[serde(default)]
    topic: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    when: Spanned<String>,
    to: Spanned<String>,
}

struct Checker<'a> {
    file: &'a str,
    src: &'a str,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn line(&self, offset: usize) -> usize {
        self.src[..offset.min(self.src.len())].matches('\n').count() + 1
    }

    fn at(&mut self, offset: usize, rule: &str, message: String) {
        let line = self.line(offset);
        self.out.push(Diagnostic {
            file: self.file.to_string(),
            line,
            rule: rule.to_string(),
            message,
        });
    }
}

fn build_matcher(raw: &RawExpectation) -> Result<Matcher, String> {
    let id = raw.id.get_ref();
    match raw.kind.as_str() {
        "keyword_set" => {
            let words = raw.words.clone().ok_or_else(|| format!("expectation `{id}` needs `words`"))?;
            let mode = match raw.mode.as_deref() {
                None | Some("any") => KeywordMode::Any,
                Some("all") => KeywordMode::All,
                Some(m) => return Err(format!("expectation `{id}` has unknown mode `{m}`")),
            };
            Ok(Matcher::KeywordSet { words, mode })
        }
        "dialogue_act" => {
            let act = raw.act.as_deref().ok_or_else(|| format!("expectation `{id}` needs `act`"))?;
            let act = DialogueAct::parse(act).ok_or_else(|| format!("expectation `{id}` has unknown act `{act}`"))?;
            Ok(Matcher::DialogueActIs { act })
        }
        "sentiment_range" => match (raw.lo, raw.hi) {
            (Some(lo), Some(hi)) => Ok(Matcher::SentimentRange { lo, hi }),
            _ => Err(format!("expectation `{id}` needs `lo` and `hi`")),
        },
        "predicate" => {
            let name = raw.name.clone().ok_or_else(|| format!("expectation `{id}` needs `name`"))?;
            Ok(Matcher::Predicate { name })
        }
        k => Err(format!("expectation `{id}` has unknown kind `{k}`")),
    }
}

fn build_post(raw: &RawPost) -> Result<StateUpdate, String> {
    let op = raw.op.get_ref().as_str();
    let need = |v: &Option<String>, field: &str| v.clone().ok_or_else(|| format!("`{op}` needs `{field}`"));
    Ok(match op {
        "set_var" => StateUpdate::SetVar {
            name: need(&raw.name, "name")?,
            value: need(&raw.value, "value")?,
        },
        "call_function" => StateUpdate::CallFunction {
            name: need(&raw.name, "name")?,
        },
        "mark_topic_explored" => StateUpdate::MarkTopicExplored {
            topic: need(&raw.topic, "topic")?,
        },
        _ => return Err(format!("unknown postcondition op `{op}`")),
    })
}

/// Parses and validates one flow document. `file` is used in diagnostics.
pub fn parse_flow(file: &str, src: &str, registry: &FunctionRegistry) -> Result<FlowDef, Vec<Diagnostic>> {
    let mut ck = Checker {
        file,
        src,
        out: Vec::new(),
    };
    let raw: RawFlow = match toml::from_str(src) {
        Ok(r) => r,
        Err(e) => {
            let offset = e.span().map(|s| s.start).unwrap_or(0);
            ck.at(offset, "parse-error", e.message().to_string());
            return Err(ck.out);
        }
    };

    let mut expectations = BTreeMap::new();
    for e in &raw.expectations {
        let off = e.id.span().start;
        let id = e.id.get_ref().clone();
        if expectations.contains_key(&id) {
            ck.at(off, "duplicate-expectation", format!("expectation `{id}` is defined twice"));
            continue;
        }
        let matcher = match build_matcher(e) {
            Ok(m) => m,
            Err(msg) => {
                ck.at(off, "bad-expectation", msg);
                continue;
            }
        };
        let exp = Expectation {
            id: id.clone(),
            matcher,
            consume: e.consume,
        };
        if let Err(err) = exp.validate(registry) {
            let rule = match err {
                ExpectationError::EmptyKeywords(_) => "empty-keywords",
                ExpectationError::BadSentimentRange { .. } => "bad-sentiment-range",
                ExpectationError::UnknownPredicate { .. } => "unknown-predicate",
            };
            ck.at(off, rule, err.to_string());
            continue;
        }
        expectations.insert(id, exp);
    }
    let declared_exps: BTreeSet<&str> = raw.expectations.iter().map(|e| e.id.get_ref().as_str()).collect();

    let mut nodes: BTreeMap<String, FlowNode> = BTreeMap::new();
    let mut node_lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut templates: Vec<(String, usize, Template)> = Vec::new();
    for n in &raw.nodes {
        let off = n.id.span().start;
        let id = n.id.get_ref().clone();
        if nodes.contains_key(&id) {
            ck.at(off, "duplicate-node", format!("node `{id}` is defined twice"));
            continue;
        }
        let action = match (&n.say, &n.delegate) {
            (Some(say), None) => match Template::parse(say.get_ref()) {
                Ok(t) => {
                    templates.push((id.clone(), say.span().start, t.clone()));
                    NodeAction::Say(t)
                }
                Err(msg) => {
                    ck.at(say.span().start, "bad-template", msg);
                    continue;
                }
            },
            (None, Some(d)) => {
                let Some(module) = DelegateModule::parse(d.module.get_ref()) else {
                    ck.at(
                        d.module.span().start,
                        "unknown-delegate",
                        format!("node `{id}` delegates to unknown module `{}`", d.module.get_ref()),
                    );
                    continue;
                };
                let missing: Vec<&str> = module
                    .required_args()
                    .iter()
                    .copied()
                    .filter(|a| !d.args.contains_key(*a))
                    .collect();
                if !missing.is_empty() {
                    ck.at(
                        d.module.span().start,
                        "bad-delegate-args",
                        format!("node `{id}` delegate is missing {}", missing.join(", ")),
                    );
                    continue;
                }
                let fallback = match &d.fallback {
                    Some(f) => match Template::parse(f.get_ref()) {
                        Ok(t) => {
                            templates.push((id.clone(), f.span().start, t.clone()));
                            Some(t)
                        }
                        Err(msg) => {
                            ck.at(f.span().start, "bad-template", msg);
                            continue;
                        }
                    },
                    None => None,
                };
                NodeAction::Delegate(Delegate {
                    module,
                    args: d.args.clone(),
                    fallback,
                })
            }
            _ => {
                ck.at(off, "bad-action", format!("node `{id}` needs exactly one of `say` or `delegate`"));
                continue;
            }
        };
        let mut postconditions = Vec::new();
        for p in &n.postconditions {
            match build_post(p) {
                Ok(StateUpdate::CallFunction { name }) if !registry.has_action(&name) => {
                    ck.at(p.op.span().start, "unknown-function", format!("node `{id}` calls unregistered function `{name}`"));
                }
                Ok(u) => postconditions.push(u),
                Err(msg) => ck.at(p.op.span().start, "bad-action", format!("node `{id}`: {msg}")),
            }
        }
        let edges = n
            .edges
            .iter()
            .map(|e| Edge {
                when: e.when.get_ref().clone(),
                to: e.to.get_ref().clone(),
            })
            .collect();
        node_lines.insert(id.clone(), ck.line(off));
        nodes.insert(
            id.clone(),
            FlowNode {
                id,
                action,
                postconditions,
                edges,
            },
        );
    }
    let declared_nodes: BTreeSet<&str> = raw.nodes.iter().map(|n| n.id.get_ref().as_str()).collect();

    for n in &raw.nodes {
        for e in &n.edges {
            if !declared_exps.contains(e.when.get_ref().as_str()) {
                ck.at(
                    e.when.span().start,
                    "dangling-expectation",
                    format!("node `{}` edge uses undefined expectation `{}`", n.id.get_ref(), e.when.get_ref()),
                );
            }
            if !declared_nodes.contains(e.to.get_ref().as_str()) {
                ck.at(
                    e.to.span().start,
                    "unknown-target",
                    format!("node `{}` edge targets undefined node `{}`", n.id.get_ref(), e.to.get_ref()),
                );
            }
        }
    }

    if raw.subroots.is_empty() {
        ck.at(raw.id.span().start, "no-subroots", format!("flow `{}` declares no subroots", raw.id.get_ref()));
    }
    for s in &raw.subroots {
        if !declared_nodes.contains(s.get_ref().as_str()) {
            ck.at(s.span().start, "unknown-subroot", format!("subroot `{}` is not a node", s.get_ref()));
        }
    }
    let subroots: Vec<String> = raw.subroots.iter().map(|s| s.get_ref().clone()).collect();

    let reachable = reachable_from(&subroots, &nodes);
    for n in &raw.nodes {
        let id = n.id.get_ref();
        if !subroots.is_empty() && nodes.contains_key(id) && !reachable.contains(id.as_str()) {
            ck.at(n.id.span().start, "unreachable-node", format!("node `{id}` is unreachable from every subroot"));
        }
    }

    let bound = must_bound(&subroots, &nodes, &reachable);
    for (node, offset, t) in &templates {
        let Some(have) = bound.get(node.as_str()) else {
            continue;
        };
        for v in t.required_vars() {
            if !have.contains(v) {
                ck.at(
                    *offset,
                    "unbound-template-var",
                    format!("node `{node}` uses `{{{v}}}`, which is not bound on every path"),
                );
            }
        }
    }

    if !ck.out.is_empty() {
        ck.out.sort_by_key(|d| d.line);
        return Err(ck.out);
    }
    let id = raw.id.into_inner();
    Ok(FlowDef {
        title: raw.title.unwrap_or_else(|| id.replace('_', " ")),
        id,
        topic: raw.topic,
        adjacent_topics: raw.adjacent_topics,
        triggers: raw.triggers,
        subroots,
        nodes,
        expectations,
    })
}

fn reachable_from<'a>(subroots: &'a [String], nodes: &'a BTreeMap<String, FlowNode>) -> BTreeSet<&'a str> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut queue: VecDeque<&str> = subroots
        .iter()
        .map(String::as_str)
        .filter(|s| nodes.contains_key(*s))
        .collect();
    while let Some(n) = queue.pop_front() {
        if !seen.insert(n) {
            continue;
        }
        for e in &nodes[n].edges {
            if nodes.contains_key(&e.to) && !seen.contains(e.to.as_str()) {
                queue.push_back(&e.to);
            }
        }
    }
    seen
}

/// Variables bound on every path into each reachable node. Only literal
/// `set_var` postconditions count; subroots start with nothing bound.
fn must_bound<'a>(
    subroots: &[String],
    nodes: &'a BTreeMap<String, FlowNode>,
    reachable: &BTreeSet<&'a str>,
) -> BTreeMap<&'a str, BTreeSet<&'a str>> {
    let defs = |n: &'a FlowNode| -> BTreeSet<&'a str> {
        n.postconditions
            .iter()
            .filter_map(|u| match u {
                StateUpdate::SetVar { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect()
    };
    let universe: BTreeSet<&str> = nodes.values().flat_map(defs).collect();
    let mut preds: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for n in nodes.values().filter(|n| reachable.contains(n.id.as_str())) {
        for e in &n.edges {
            preds.entry(e.to.as_str()).or_default().push(n.id.as_str());
        }
    }
    let is_root = |id: &str| subroots.iter().any(|s| s == id);
    let mut input: BTreeMap<&str, BTreeSet<&str>> = reachable
        .iter()
        .map(|&id| (id, if is_root(id) { BTreeSet::new() } else { universe.clone() }))
        .collect();
    loop {
        let mut changed = false;
        for &id in reachable {
            if is_root(id) {
                continue;
            }
            let mut acc: Option<BTreeSet<&str>> = None;
            for &p in preds.get(id).map(Vec::as_slice).unwrap_or(&[]) {
                let mut out = input[p].clone();
                out.extend(defs(&nodes[p]));
                acc = Some(match acc {
                    None => out,
                    Some(a) => a.intersection(&out).copied().collect(),
                });
            }
            let new = acc.unwrap_or_default();
            if new != input[id] {
                input.insert(id, new);
                changed = true;
            }
        }
        if !changed {
            return input;
        }
    }
}

/// Loads every `*.toml` flow in `dir`, sorted by file name. All violations
/// across all files are reported together.
pub fn load_flows(dir: &Path, registry: &FunctionRegistry) -> Result<FlowSet, Vec<Diagnostic>> {
    let diag = |file: String, rule: &str, message: String| Diagnostic {
        file,
        line: 0,
        rule: rule.into(),
        message,
    };
    let entries = std::fs::read_dir(dir).map_err(|e| vec![diag(dir.display().to_string(), "io-error", e.to_string())])?;
    let mut paths: Vec<_> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    let mut flows: Vec<FlowDef> = Vec::new();
    let mut errors = Vec::new();
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    for path in paths {
        let file = path.display().to_string();
        let src = match std::fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) => {
                errors.push(diag(file, "io-error", e.to_string()));
                continue;
            }
        };
        match parse_flow(&file, &src, registry) {
            Ok(f) => {
                if let Some(first) = seen.get(&f.id) {
                    errors.push(Diagnostic {
                        file: file.clone(),
                        line: 1,
                        rule: "duplicate-flow-id".into(),
                        message: format!("flow id `{}` already defined in {first}", f.id),
                    });
                    continue;
                }
                seen.insert(f.id.clone(), file);
                flows.push(f);
            }
            Err(d) => errors.extend(d),
        }
    }
    if errors.is_empty() {
        Ok(FlowSet::new(flows))
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(src: &str) -> Result<FlowDef, Vec<Diagnostic>> {
        parse_flow("t.toml", src, &FunctionRegistry::builtin())
    }

    fn rules(src: &str) -> Vec<String> {
        check(src).unwrap_err().into_iter().map(|d| d.rule).collect()
    }

    const GOOD: &str = r#"
id = "pets"
topic = "animals"
triggers = ["pets"]
subroots = ["ask"]

[[expectation]]
id = "dog"
kind = "keyword_set"
words = ["dog"]

[[node]]
id = "ask"
say = "Do you have a pet?"
edges = [{ when = "dog", to = "dog" }]

[[node]]
id = "dog"
say = "Dogs are great."
postconditions = [{ op = "set_var", name = "pet", value = "dog" }]
"#;

    #[test]
    fn good_flow_loads() {
        let f = check(GOOD).unwrap();
        assert_eq!(f.subroots, vec!["ask"]);
        assert_eq!(f.title, "pets");
        assert_eq!(f.nodes.len(), 2);
    }

    #[test]
    fn unbound_var_requires_all_paths() {
        let src = r#"
id = "x"
topic = "x"
subroots = ["a"]
[[expectation]]
id = "go"
kind = "dialogue_act"
act = "yes"
[[node]]
id = "a"
say = "start"
edges = [{ when = "go", to = "b" }, { when = "go", to = "c" }]
[[node]]
id = "b"
say = "b"
postconditions = [{ op = "set_var", name = "v", value = "1" }]
edges = [{ when = "go", to = "d" }]
[[node]]
id = "c"
say = "c"
edges = [{ when = "go", to = "d" }]
[[node]]
id = "d"
say = "value {v}"
"#;
        assert_eq!(rules(src), vec!["unbound-template-var"]);
        let fixed = src.replace("say = \"c\"", "say = \"c\"\npostconditions = [{ op = \"set_var\", name = \"v\", value = \"2\" }]");
        assert!(check(&fixed).is_ok());
    }

    #[test]
    fn diagnostics_carry_lines() {
        let src = GOOD.replace("to = \"dog\"", "to = \"cat\"");
        let d = check(&src).unwrap_err();
        assert_eq!(d[0].rule, "unknown-target");
        assert_eq!(d[0].line, 15);
    }
}
