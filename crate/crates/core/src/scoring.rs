//! Candidate reranking.
//!
//! Each non-priority candidate gets
//! `confidence = clamp(min(max(context, confidence) - loss, 1), 0, 1)` where
//! `loss = incoherence + repeat + sent_len`. Priority candidates bypass the
//! update and the first one in pool order wins outright. Ties on the final
//! confidence are broken uniformly at random with the session's generator.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::candidate::{ModuleId, ResponseCandidate};
use crate::nlu::UtteranceAnalysis;
use crate::text::{jaccard, tokenize};

/// Penalty constants; defaults follow the published values where they exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    pub incoherence_penalty: f64,
    pub repeat_penalty: f64,
    /// Token count above which the length penalty starts.
    pub length_threshold: usize,
    pub length_slope: f64,
    pub length_cap: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            incoherence_penalty: 0.15,
            repeat_penalty: 0.05,
            length_threshold: 25,
            length_slope: 0.005,
            length_cap: 0.15,
        }
    }
}

/// Explicit-content word list; matches whole tokens only.
#[derive(Debug, Clone, Default)]
pub struct ContentFilter {
    terms: Vec<Vec<String>>,
}

impl ContentFilter {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms = terms
            .into_iter()
            .map(|t| tokenize(t.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        Self { terms }
    }

    /// One term per line; blank lines and `#` comments ignored.
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::new(
            text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    /// `true` when the text is clean.
    pub fn content_filter(&self, text: &str) -> bool {
        let toks = tokenize(text);
        !self.terms.iter().any(|t| crate::text::contains_phrase(&toks, t))
    }
}

pub struct ScoringContext<'a> {
    pub analysis: &'a UtteranceAnalysis,
    pub active_module: Option<ModuleId>,
    pub used_prompts: &'a BTreeSet<String>,
    pub config: ScoringConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub incoherence: f64,
    pub repeat: f64,
    pub sent_len: f64,
    pub total: f64,
}

/// Mean of content-word and entity Jaccard overlap with the user turn.
pub fn context_score(c: &ResponseCandidate, ctx: &ScoringContext) -> f64 {
    let cw: BTreeSet<&str> = c.content_words.iter().map(String::as_str).collect();
    let uw: BTreeSet<&str> = ctx.analysis.content_words.iter().map(String::as_str).collect();
    let ce: BTreeSet<&str> = c.entities.iter().map(String::as_str).collect();
    let ue: BTreeSet<&str> = ctx.analysis.entity_ids().collect();
    (0.5 * jaccard(&cw, &uw) + 0.5 * jaccard(&ce, &ue)).clamp(0.0, 1.0)
}

pub fn loss(c: &ResponseCandidate, ctx: &ScoringContext) -> LossBreakdown {
    let cfg = &ctx.config;
    let incoherence = match ctx.active_module {
        Some(m) if m.is_system_initiative() && c.origin != m && !c.is_priority => cfg.incoherence_penalty,
        _ => 0.0,
    };
    let repeat = match &c.prompt_id {
        Some(p) if c.is_prompt && ctx.used_prompts.contains(p) => cfg.repeat_penalty,
        _ => 0.0,
    };
    let sent_len = if c.origin == ModuleId::Retrieval {
        let tokens = tokenize(&c.text).len();
        (cfg.length_slope * tokens.saturating_sub(cfg.length_threshold) as f64).min(cfg.length_cap)
    } else {
        0.0
    };
    LossBreakdown {
        incoherence,
        repeat,
        sent_len,
        total: incoherence + repeat + sent_len,
    }
}

/// The confidence update, floored at zero.
pub fn updated_confidence(base: f64, context: f64, loss: f64) -> f64 {
    (context.max(base) - loss).min(1.0).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub id: String,
    pub origin: ModuleId,
    pub text: String,
    pub base_confidence: f64,
    pub context: f64,
    pub loss: LossBreakdown,
    pub confidence: f64,
    pub priority: bool,
    pub filtered: bool,
}

/// Per-candidate scoring record for the turn log and debug surfaces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoringTrace {
    pub entries: Vec<TraceEntry>,
    /// Index into `entries` of the selected candidate.
    pub winner: usize,
    /// Number of candidates sharing the winning confidence.
    pub tied: usize,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScoringError {
    #[error("no candidate survived the content filter")]
    EmptyPool,
}

/// Filters, scores and picks one candidate. Returned candidate carries its
/// updated confidence.
pub fn select_response<R: Rng + ?Sized>(
    pool: Vec<ResponseCandidate>,
    ctx: &ScoringContext,
    filter: &ContentFilter,
    rng: &mut R,
) -> Result<(ResponseCandidate, ScoringTrace), ScoringError> {
    let mut trace = ScoringTrace::default();
    let mut live: Vec<(usize, ResponseCandidate)> = Vec::new();

    for c in pool {
        let clean = filter.content_filter(&c.text);
        let idx = trace.entries.len();
        trace.entries.push(TraceEntry {
            id: c.id.clone(),
            origin: c.origin,
            text: c.text.clone(),
            base_confidence: c.confidence,
            context: 0.0,
            loss: LossBreakdown::default(),
            confidence: c.confidence,
            priority: c.is_priority,
            filtered: !clean,
        });
        if clean {
            live.push((idx, c));
        }
    }
    if live.is_empty() {
        return Err(ScoringError::EmptyPool);
    }

    if let Some(pos) = live.iter().position(|(_, c)| c.is_priority) {
        let (idx, c) = live.swap_remove(pos);
        trace.winner = idx;
        trace.tied = 1;
        return Ok((c, trace));
    }

    for (idx, c) in live.iter_mut() {
        let context = context_score(c, ctx);
        let l = loss(c, ctx);
        c.confidence = updated_confidence(c.confidence, context, l.total);
        let e = &mut trace.entries[*idx];
        e.context = context;
        e.loss = l;
        e.confidence = c.confidence;
    }

    let best = live.iter().map(|(_, c)| c.confidence).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = live
        .iter()
        .enumerate()
        .filter(|(_, (_, c))| c.confidence == best)
        .map(|(i, _)| i)
        .collect();
    let pick = if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.gen_range(0..tied.len())]
    };
    trace.tied = tied.len();
    let (idx, c) = live.swap_remove(pick);
    trace.winner = idx;
    Ok((c, trace))
}
