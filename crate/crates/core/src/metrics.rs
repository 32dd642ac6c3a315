//! Engagement statistics computed from JSONL turn logs.
//!
//! An episode of a module is a maximal run of consecutive turns answered by
//! that module. A flow counts as utilized when the user spent more than two
//! turns in it after it was prompted.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::service::TurnLogRecord;

pub const UTILIZED_MIN_TURNS: usize = 3;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanCount {
    pub episodes: usize,
    pub turns: usize,
}

impl MeanCount {
    pub fn mean(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.turns as f64 / self.episodes as f64
        }
    }

    fn add(&mut self, turns: usize) {
        self.episodes += 1;
        self.turns += turns;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowUsage {
    pub prompted: usize,
    pub utilized: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sessions: usize,
    pub turns: usize,
    /// Module name to user turns per episode.
    pub modules: BTreeMap<String, MeanCount>,
    pub flows: BTreeMap<String, FlowUsage>,
    /// Fact topic to user turns per recursion episode.
    pub recursive_topics: BTreeMap<String, MeanCount>,
}

/// Aggregates logs of whole sessions; records of one session must be
/// contiguous and in turn order.
pub fn compute(records: &[TurnLogRecord]) -> Metrics {
    let mut m = Metrics::default();
    let mut sessions: Vec<&[TurnLogRecord]> = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len() || records[i].session_id != records[start].session_id {
            if i > start {
                sessions.push(&records[start..i]);
            }
            start = i;
        }
    }
    m.sessions = sessions.len();
    m.turns = records.len();

    for turns in sessions {
        let mut i = 0;
        while i < turns.len() {
            let origin = turns[i].origin;
            let mut j = i;
            while j < turns.len() && turns[j].origin == origin {
                j += 1;
            }
            m.modules.entry(origin.as_str().to_string()).or_default().add(j - i);
            i = j;
        }

        let mut i = 0;
        while i < turns.len() {
            let Some(topic) = turns[i].recursive_topic.clone() else {
                i += 1;
                continue;
            };
            let mut j = i + 1;
            while j < turns.len() && turns[j - 1].recursive_topic.as_deref() == Some(topic.as_str()) {
                j += 1;
            }
            m.recursive_topics.entry(topic).or_default().add(j - i);
            i = j;
        }

        for (i, t) in turns.iter().enumerate() {
            let Some(flow) = &t.flow_prompted else {
                continue;
            };
            let stayed = 1 + turns[i + 1..]
                .iter()
                .take_while(|n| n.flow_before.as_deref() == Some(flow.as_str()) && n.flow_prompted.is_none())
                .count();
            let u = m.flows.entry(flow.clone()).or_default();
            u.prompted += 1;
            if stayed >= UTILIZED_MIN_TURNS {
                u.utilized += 1;
            }
        }
    }
    m
}

pub fn parse_jsonl(src: &str) -> Result<Vec<TurnLogRecord>, serde_json::Error> {
    src.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidate::ModuleId;

    fn rec(session: &str, origin: ModuleId, flow_before: Option<&str>, prompted: Option<&str>, topic: Option<&str>) -> TurnLogRecord {
        TurnLogRecord {
            session_id: session.into(),
            turn: 0,
            user: String::new(),
            reply: String::new(),
            origin,
            module_before: None,
            module_after: None,
            flow_before: flow_before.map(str::to_string),
            flow_after: None,
            flow_prompted: prompted.map(str::to_string),
            recursive_topic: topic.map(str::to_string),
            priority: None,
            expectations: Vec::new(),
            end_session: false,
        }
    }

    #[test]
    fn episodes_and_flows() {
        use ModuleId::*;
        let logs = vec![
            rec("a", Recursive, None, None, Some("science")),
            rec("a", Recursive, None, None, Some("science")),
            rec("a", Recursive, None, None, None),
            rec("a", Flow, None, Some("books"), None),
            rec("a", Flow, Some("books"), None, None),
            rec("a", Flow, Some("books"), None, None),
            rec("b", Flow, None, Some("music"), None),
            rec("b", Opinions, None, None, None),
        ];
        let m = compute(&logs);
        assert_eq!(m.sessions, 2);
        assert_eq!(m.modules["recursive"], MeanCount { episodes: 1, turns: 3 });
        assert_eq!(m.modules["flow"].episodes, 2);
        assert_eq!(m.modules["flow"].mean(), 2.0);
        assert_eq!(m.flows["books"], FlowUsage { prompted: 1, utilized: 1 });
        assert_eq!(m.flows["music"], FlowUsage { prompted: 1, utilized: 0 });
        assert_eq!(m.recursive_topics["science"], MeanCount { episodes: 1, turns: 3 });
    }
}
