//! Personality-style quizzes: a handful of questions, a weighted tally, and
//! a result.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{exit, ActivityState};
use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use crate::context::ModuleContext;
use crate::text::{contains_phrase, tokenize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyOption {
    pub label: String,
    /// Phrases that select this option; the label itself always does.
    #[serde(default)]
    pub keywords: Vec<String>,
    pub weights: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyQuestion {
    pub text: String,
    pub options: Vec<SurveyOption>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Survey {
    pub id: String,
    /// Completes "Let's find out ...", e.g. "which Harry Potter house you belong to".
    pub title: String,
    pub triggers: Vec<String>,
    /// Declaration order breaks ties in the result.
    pub categories: Vec<String>,
    pub questions: Vec<SurveyQuestion>,
    pub results: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyState {
    pub survey_id: String,
    pub index: usize,
    pub tally: BTreeMap<String, i64>,
    /// Chosen option per answered question; `None` for skipped ones.
    pub answers: Vec<Option<usize>>,
    pub reasks: u32,
}

pub const MAX_REASKS: u32 = 2;
const ORDINALS: [&str; 6] = ["first", "second", "third", "fourth", "fifth", "sixth"];

/// Category with the highest tally; ties go to the earliest declared.
pub fn survey_result(categories: &[String], tally: &BTreeMap<String, i64>) -> Option<String> {
    let mut best: Option<(&String, i64)> = None;
    for c in categories {
        let v = tally.get(c).copied().unwrap_or(0);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((c, v));
        }
    }
    best.map(|(c, _)| c.clone())
}

/// Option picked by the user's turn: a label or keyword on any hypothesis,
/// else an ordinal ("the second one").
pub fn parse_option(ctx: &ModuleContext, q: &SurveyQuestion) -> Option<usize> {
    let hyps: Vec<Vec<String>> = std::iter::once(ctx.analysis.tokens.clone())
        .chain(ctx.analysis.hypothesis_tokens())
        .collect();
    let hit = |phrase: &str| {
        let p = tokenize(phrase);
        !p.is_empty() && hyps.iter().any(|h| contains_phrase(h, &p))
    };
    let matches: Vec<usize> = q
        .options
        .iter()
        .enumerate()
        .filter(|(_, o)| hit(&o.label) || o.keywords.iter().any(|k| hit(k)))
        .map(|(i, _)| i)
        .collect();
    if matches.len() == 1 {
        return Some(matches[0]);
    }
    if matches.is_empty() {
        return ORDINALS.iter().take(q.options.len()).position(|o| hit(o));
    }
    None
}

fn apply(tally: &mut BTreeMap<String, i64>, option: &SurveyOption) {
    for (cat, w) in &option.weights {
        *tally.entry(cat.clone()).or_default() += w;
    }
}

pub fn start(ctx: &ModuleContext, survey_id: &str, base: f64) -> Option<ResponseCandidate> {
    let s = ctx.packs.survey(survey_id)?;
    let first = s.questions.first()?;
    Some(
        ResponseCandidate::new(
            ModuleId::Survey,
            format!("Let's find out {}! First question. {}", s.title, first.text),
            base,
        )
        .topic("surveys")
        .update(StateUpdate::MarkTopicExplored { topic: "surveys".into() })
        .update(StateUpdate::SetActivity {
            activity: Some(ActivityState::Survey(SurveyState {
                survey_id: s.id.clone(),
                index: 0,
                tally: BTreeMap::new(),
                answers: Vec::new(),
                reasks: 0,
            })),
        }),
    )
}

pub fn step(ctx: &ModuleContext, state: &SurveyState) -> Vec<ResponseCandidate> {
    let Some(s) = ctx.packs.survey(&state.survey_id) else {
        return vec![exit(ModuleId::Survey, "Let's do something else. What would you like to talk about?", 1.0)];
    };
    let Some(q) = s.questions.get(state.index) else {
        return vec![exit(ModuleId::Survey, "That's the end of the quiz. What would you like to talk about?", 1.0)];
    };
    let mut next = state.clone();
    let lead = match parse_option(ctx, q) {
        Some(i) => {
            apply(&mut next.tally, &q.options[i]);
            next.answers.push(Some(i));
            "Got it."
        }
        None if state.reasks < MAX_REASKS => {
            next.reasks += 1;
            let text = format!("Sorry, I didn't catch which one you picked. {}", q.text);
            let c = ResponseCandidate::new(ModuleId::Survey, text, 0.9).update(StateUpdate::SetActivity {
                activity: Some(ActivityState::Survey(next)),
            });
            return vec![c];
        }
        None => {
            next.answers.push(None);
            "Let's skip that one."
        }
    };
    next.index += 1;
    next.reasks = 0;
    if let Some(q2) = s.questions.get(next.index) {
        let text = format!("{lead} Next question. {}", q2.text);
        return vec![ResponseCandidate::new(ModuleId::Survey, text, 1.0).update(StateUpdate::SetActivity {
            activity: Some(ActivityState::Survey(next)),
        })];
    }
    let result = survey_result(&s.categories, &next.tally)
        .and_then(|c| s.results.get(&c).cloned())
        .unwrap_or_else(|| "I couldn't decide on a result for you.".into());
    vec![exit(ModuleId::Survey, &format!("{lead} {result}"), 1.0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_earliest_category() {
        let cats: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let tally = BTreeMap::from([("b".to_string(), 2), ("c".to_string(), 2)]);
        assert_eq!(survey_result(&cats, &tally).as_deref(), Some("b"));
        assert_eq!(survey_result(&cats, &BTreeMap::new()).as_deref(), Some("a"));
    }
}
