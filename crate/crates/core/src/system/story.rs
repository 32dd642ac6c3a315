//! Storytelling: an opener, then the story in short windows with
//! continuation checks, answering questions from annotated QA pairs.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{declines, exit, wants_more, ActivityState};
use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use crate::context::ModuleContext;
use crate::nlu::DialogueAct;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryQa {
    pub keywords: Vec<String>,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Story {
    pub id: String,
    pub title: String,
    pub rank: u32,
    pub opener: String,
    pub sentences: Vec<String>,
    pub qa: Vec<StoryQa>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryState {
    pub story_id: String,
    /// Sentences already told.
    pub cursor: usize,
}

pub const PAUSE_MS: u32 = 500;
const CONTINUE: &str = "Want to hear what happened next?";
const REROUTE: &str = "Anyway, back to my story.";
const FINISH: &str = "And that's the end of my story.";

fn quote_count(s: &str) -> usize {
    s.chars().filter(|c| matches!(c, '"' | '“' | '”')).count()
}

/// The next window starting at `cursor`: `window` sentences, one more when
/// that extra sentence closes a quotation left open by the window.
pub fn next_window(sentences: &[String], cursor: usize, window: usize) -> Range<usize> {
    let window = window.max(1);
    let end = (cursor + window).min(sentences.len());
    if end < sentences.len() {
        let open = sentences[cursor..end].iter().map(|s| quote_count(s)).sum::<usize>() % 2 == 1;
        if open && quote_count(&sentences[end]) % 2 == 1 {
            return cursor..end + 1;
        }
    }
    cursor..end
}

/// Every window of a full telling, in order.
pub fn windows(sentences: &[String], window: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut cursor = 0;
    while cursor < sentences.len() {
        let w = next_window(sentences, cursor, window);
        cursor = w.end;
        out.push(w);
    }
    out
}

fn story_key(id: &str) -> String {
    format!("story:{id}")
}

/// Picks a story for the request: best title overlap with the user's content
/// words, else the best-ranked story not yet told. Negative stories never
/// qualify.
pub fn select_story<'a>(ctx: &ModuleContext<'a>) -> Option<&'a Story> {
    let eligible: Vec<&Story> = ctx
        .packs
        .stories
        .iter()
        .filter(|s| !ctx.packs.negative_stories.contains(&s.id) && !ctx.used(&story_key(&s.id)))
        .collect();
    let words: BTreeSet<&str> = ctx.analysis.content_words.iter().map(String::as_str).collect();
    let by_title = eligible
        .iter()
        .map(|s| {
            let title = ctx.analyzer.content_words(&s.title);
            (title.iter().filter(|w| words.contains(w.as_str()) && *w != "story").count(), *s)
        })
        .filter(|(n, _)| *n > 0)
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.rank.cmp(&a.1.rank)));
    if let Some((_, s)) = by_title {
        return Some(s);
    }
    eligible.into_iter().min_by_key(|s| s.rank)
}

pub fn start(ctx: &ModuleContext, base: f64) -> Option<ResponseCandidate> {
    let story = select_story(ctx)?;
    Some(
        ResponseCandidate::new(ModuleId::Storytelling, story.opener.clone(), base)
            .topic("stories")
            .update(StateUpdate::MarkFactUsed {
                fact_id: story_key(&story.id),
            })
            .update(StateUpdate::MarkTopicExplored { topic: "stories".into() })
            .update(StateUpdate::SetActivity {
                activity: Some(ActivityState::Story(StoryState {
                    story_id: story.id.clone(),
                    cursor: 0,
                })),
            }),
    )
}

fn telling(ctx: &ModuleContext, story: &Story, state: &StoryState, prefix: Option<&str>, base: f64) -> ResponseCandidate {
    let w = next_window(&story.sentences, state.cursor, ctx.story_window);
    let done = w.end >= story.sentences.len();
    let mut text = String::new();
    let mut pauses = Vec::new();
    if let Some(p) = prefix {
        text.push_str(p);
        text.push(' ');
    }
    for (i, s) in story.sentences[w.clone()].iter().enumerate() {
        if i > 0 {
            pauses.push(text.chars().count());
            text.push(' ');
        }
        text.push_str(s);
    }
    text.push(' ');
    text.push_str(if done { FINISH } else { CONTINUE });
    let next = if done {
        None
    } else {
        Some(ActivityState::Story(StoryState {
            story_id: state.story_id.clone(),
            cursor: w.end,
        }))
    };
    let mut c = ResponseCandidate::new(ModuleId::Storytelling, text, base)
        .topic("stories")
        .update(StateUpdate::SetActivity { activity: next });
    for p in pauses {
        c = c.pause(p, PAUSE_MS);
    }
    c
}

/// Continuation candidates while a story is active.
pub fn step(ctx: &ModuleContext, state: &StoryState) -> Vec<ResponseCandidate> {
    let Some(story) = ctx.packs.story(&state.story_id) else {
        return vec![exit(ModuleId::Storytelling, "I lost my place in that story. What would you like to talk about?", 1.0)];
    };
    if state.cursor >= story.sentences.len() {
        return vec![exit(ModuleId::Storytelling, "That's the whole story. What would you like to talk about?", 1.0)];
    }
    let a = ctx.analysis;
    // "no" to "did I ever tell you ..." is an invitation, not a refusal
    let opener_no = state.cursor == 0 && a.dialogue_act == DialogueAct::NoAnswer;
    if declines(a) && !opener_no {
        return vec![exit(
            ModuleId::Storytelling,
            "Okay, we can stop the story there. What would you like to talk about?",
            1.0,
        )];
    }
    let cooperative = opener_no
        || wants_more(a)
        || matches!(a.dialogue_act, DialogueAct::Other | DialogueAct::Greeting)
        || (a.dialogue_act != DialogueAct::Question && a.content_words.len() <= 2);
    if cooperative {
        vec![telling(ctx, story, state, None, 1.0)]
    } else {
        vec![telling(ctx, story, state, Some(REROUTE), 0.8)]
    }
}

/// Answer from the active story's QA pairs: every keyword of a pair must
/// appear among the user's words.
pub fn answer(ctx: &ModuleContext, state: &StoryState) -> Option<String> {
    let story = ctx.packs.story(&state.story_id)?;
    let mut words: BTreeSet<String> = ctx.analysis.tokens.iter().cloned().collect();
    for h in ctx.analysis.hypothesis_tokens() {
        words.extend(h);
    }
    story
        .qa
        .iter()
        .filter(|qa| !qa.keywords.is_empty() && qa.keywords.iter().all(|k| words.contains(k)))
        .max_by_key(|qa| qa.keywords.len())
        .map(|qa| qa.answer.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("Sentence {i}.")).collect()
    }

    #[test]
    fn five_sentences_split_two_two_one() {
        let sizes: Vec<usize> = windows(&sents(5), 2).iter().map(|w| w.len()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
    }

    #[test]
    fn quoted_exchange_takes_three() {
        let s: Vec<String> = ["He said \"wait.", "Then stop.", "Now go.\"", "After."]
            .iter()
            .map(|x| x.to_string())
            .collect();
        let sizes: Vec<usize> = windows(&s, 2).iter().map(|w| w.len()).collect();
        assert_eq!(sizes, vec![3, 1]);
    }
}
