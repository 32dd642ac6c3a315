//! One check per acceptance criterion. Each returns a one-line summary on
//! success and a description of the first failure otherwise. Expected values
//! come from hand tables or from oracles written here, never from the code
//! under test.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use parlor_core::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use parlor_core::expectation::FunctionRegistry;
use parlor_core::flow::{enter_flow, follow_edge, load_flows, parse_flow, trigger_flow, FlowSet};
use parlor_core::memory::{LtmRecord, LtmStore, SessionState, TurnEvent};
use parlor_core::mixed::opinions::OpinionProfile;
use parlor_core::mixed::retrieval::{Bm25Index, TurnDocument};
use parlor_core::nlu::{AsrInput, UtteranceAnalysis};
use parlor_core::replay::{parse_script, run_script, ServiceDriver};
use parlor_core::scoring::{loss, select_response, updated_confidence, ContentFilter, ScoringConfig, ScoringContext};
use parlor_core::service::{OpenRequest, Service};
use parlor_core::system::games::nim::nim_move;
use parlor_core::Engine;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fixtures_dir, module_ctx, Fixture};

pub type Check = fn() -> Result<String, String>;

/// Every criterion this crate can check on its own, in order.
pub const CORE_CRITERIA: &[(&str, Check)] = &[
    ("confidence update table", confidence_table),
    ("penalty constants", penalty_pairs),
    ("priority dominance", priority_dominance),
    ("tie-break uniformity", tie_uniformity),
    ("sample flow golden rows", sample_flow_golden),
    ("flow validator", flow_validator),
    ("nim oracle", nim_oracle),
    ("bm25 oracle", bm25_oracle),
    ("transcript replays", transcript_replays),
    ("multi-turn engagement", engagement),
    ("stm/ltm", memory_tiers),
];

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const EPS: f64 = 1e-9;

/// `(base, context, loss, expected)` worked by hand.
pub const CONFIDENCE_TABLE: &[(f64, f64, f64, f64)] = &[
    (1.0, 0.0, 0.0, 1.0),
    (0.6, 0.0, 0.0, 0.6),
    (0.6, 0.8, 0.0, 0.8),
    (0.6, 0.8, 0.15, 0.65),
    (0.5, 0.2, 0.05, 0.45),
    (0.5, 0.2, 0.2, 0.3),
    (0.0, 0.0, 0.0, 0.0),
    (0.1, 0.0, 0.15, 0.0),
    (0.3, 0.3, 0.3, 0.0),
    (0.9, 0.4, 0.15, 0.75),
    (1.0, 1.0, 0.05, 0.95),
    (0.7, 0.9, 0.2, 0.7),
    (0.2, 0.95, 0.0, 0.95),
    (0.45, 0.45, 0.05, 0.4),
    (0.8, 0.1, 0.35, 0.45),
    (0.05, 0.0, 0.05, 0.0),
    (1.0, 0.0, 1.0, 0.0),
    (0.33, 0.66, 0.16, 0.5),
    (0.25, 0.75, 0.25, 0.5),
    (0.6, 0.6, 0.0, 0.6),
    (1.0, 0.5, 0.15, 0.85),
    (0.6, 0.3, 0.2, 0.4),
    (0.75, 0.0, 0.1, 0.65),
    (0.9, 1.25, 0.1, 1.0),
    (0.4, 0.2, 0.6, 0.0),
];

pub fn confidence_table() -> Result<String, String> {
    let started = Instant::now();
    for &(base, context, l, want) in CONFIDENCE_TABLE {
        let got = updated_confidence(base, context, l);
        ensure!((got - want).abs() < EPS, "({base}, {context}, {l}) gave {got}, expected {want}");
    }
    let table_time = started.elapsed();
    ensure!(table_time.as_secs_f64() < 1.0, "table took {table_time:?}");

    let fx = Fixture::new();
    let e = &fx.engine;
    let mut session = SessionState::new("anchor", 1);
    session.agent_profile = OpinionProfile::seed(&e.packs.opinions, None, 1);
    for (text, want) in [("I like video games", 1.0), ("I like dogs", 0.6)] {
        let analysis = e.analyzer.analyze_text(text);
        let ctx = module_ctx(e, &analysis, &session);
        let starters = trigger_flow(&ctx, &e.flows).map_err(|err| err.to_string())?;
        let c = starters
            .iter()
            .find(|c| c.id.starts_with("flow:video_games:"))
            .ok_or_else(|| format!("{text:?} offered no video_games starter"))?;
        ensure!((c.base_confidence - want).abs() < EPS, "{text:?} base {} expected {want}", c.base_confidence);

        let mut c = c.clone();
        c.content_words = e.analyzer.content_words(&c.text);
        let sctx = ScoringContext {
            analysis: &analysis,
            active_module: None,
            used_prompts: &session.used_prompts,
            config: ScoringConfig::default(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (winner, trace) = select_response(vec![c], &sctx, &ContentFilter::default(), &mut rng).map_err(|err| err.to_string())?;
        let entry = &trace.entries[0];
        let oracle = entry.context.max(want).min(1.0);
        ensure!((winner.confidence - oracle).abs() < EPS, "{text:?} final {} expected {oracle}", winner.confidence);
    }

    let svc = fx.service();
    let sid = svc.open_session(OpenRequest { seed: Some(3), ..Default::default() }).map_err(|e| e.to_string())?.session_id;
    let r = svc.turn(&sid, &AsrInput::text("I like video games")).map_err(|e| e.to_string())?;
    ensure!(r.response.origin == ModuleId::Flow, "video games turn answered by {}", r.response.origin);

    Ok(format!(
        "{} triples exact to 1e-9 in {:?}; video games starter 1.0, dogs starter 0.6",
        CONFIDENCE_TABLE.len(),
        table_time
    ))
}

const ORIGINS: &[ModuleId] = &[
    ModuleId::Opinions,
    ModuleId::Retrieval,
    ModuleId::Flow,
    ModuleId::Recursive,
    ModuleId::Survey,
    ModuleId::Storytelling,
    ModuleId::Trivia,
    ModuleId::QuestionAnswering,
];

const WORDS: &[&str] = &["dogs", "games", "video", "music", "pizza", "space", "movies", "books", "fun", "great"];

fn random_candidate(rng: &mut ChaCha8Rng, i: usize) -> ResponseCandidate {
    let origin = *ORIGINS.choose(rng).expect("non-empty");
    let n = rng.gen_range(1..6);
    let text: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect();
    let mut c = ResponseCandidate::new(origin, text.join(" "), rng.gen_range(0.0..1.0));
    c.id = format!("c{i}");
    c.content_words = text.iter().map(|w| w.to_string()).collect();
    if rng.gen_bool(0.5) {
        c = c.prompt(format!("p{i}"));
    } else if rng.gen_bool(0.3) {
        c.prompt_id = Some(format!("p{i}"));
    }
    c
}

fn oracle_confidence(base: f64, context: f64, l: f64) -> f64 {
    let v = context.max(base) - l;
    if v > 1.0 {
        1.0
    } else if v < 0.0 {
        0.0
    } else {
        v
    }
}

fn scoring_ctx<'a>(analysis: &'a UtteranceAnalysis, module: Option<ModuleId>, used: &'a BTreeSet<String>) -> ScoringContext<'a> {
    ScoringContext {
        analysis,
        active_module: module,
        used_prompts: used,
        config: ScoringConfig::default(),
    }
}

pub fn penalty_pairs() -> Result<String, String> {
    let fx = Fixture::new();
    let analysis = fx.engine.analyzer.analyze_text("I like dogs and video games and pizza");
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let filter = ContentFilter::default();
    let empty = BTreeSet::new();
    let mut pairs = 0;
    for round in 0..300 {
        let pool: Vec<ResponseCandidate> = (0..rng.gen_range(1..7)).map(|i| random_candidate(&mut rng, i)).collect();
        let active = *ORIGINS.choose(&mut rng).expect("non-empty");
        let used: BTreeSet<String> = pool.iter().filter_map(|c| c.prompt_id.clone()).collect();

        let off = scoring_ctx(&analysis, None, &empty);
        let on_module = scoring_ctx(&analysis, Some(active), &empty);
        let on_prompt = scoring_ctx(&analysis, None, &used);

        for c in &pool {
            let l0 = loss(c, &off);
            let l1 = loss(c, &on_module);
            let l2 = loss(c, &on_prompt);
            let want_incoherence = if active.is_system_initiative() && c.origin != active { 0.15 } else { 0.0 };
            let want_repeat = if c.is_prompt { 0.05 } else { 0.0 };
            ensure!(l0.incoherence == 0.0 && l0.repeat == 0.0, "round {round}: baseline carries a penalty: {l0:?}");
            ensure!(
                (l1.total - l0.total - want_incoherence).abs() < EPS && (l1.incoherence - want_incoherence).abs() < EPS,
                "round {round}: active {active} origin {} incoherence {} expected {want_incoherence}",
                c.origin,
                l1.incoherence
            );
            ensure!(
                (l2.total - l0.total - want_repeat).abs() < EPS && (l2.repeat - want_repeat).abs() < EPS,
                "round {round}: prompt flag {} repeat {} expected {want_repeat}",
                c.is_prompt,
                l2.repeat
            );
            let priority = c.clone().priority();
            ensure!(loss(&priority, &on_module).incoherence == 0.0, "round {round}: priority candidate paid incoherence");
            pairs += 2;
        }

        for sctx in [&off, &on_module, &on_prompt] {
            let (_, trace) = select_response(pool.clone(), sctx, &filter, &mut rng).map_err(|e| e.to_string())?;
            for (entry, c) in trace.entries.iter().zip(&pool) {
                let want = oracle_confidence(c.base_confidence, entry.context, loss(c, sctx).total);
                ensure!((entry.confidence - want).abs() < EPS, "round {round}: {} scored {} expected {want}", c.id, entry.confidence);
            }
        }
    }
    Ok(format!("{pairs} metamorphic pairs: incoherence 0.15 and repeat 0.05 exactly when documented"))
}

pub fn priority_dominance() -> Result<String, String> {
    let fx = Fixture::new();
    let analysis = fx.engine.analyzer.analyze_text("tell me something about dogs");
    let filter = ContentFilter::default();
    let empty = BTreeSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0B);
    for round in 0..1000 {
        let mut pool: Vec<ResponseCandidate> = (0..rng.gen_range(1..10)).map(|i| random_candidate(&mut rng, i)).collect();
        for c in &mut pool {
            c.base_confidence = rng.gen_range(0.0..=1.0);
            c.confidence = c.base_confidence;
        }
        let mut p = random_candidate(&mut rng, 99).priority();
        p.id = "priority".into();
        p.base_confidence = rng.gen_range(0.0..0.2);
        p.confidence = p.base_confidence;
        let at = rng.gen_range(0..=pool.len());
        pool.insert(at, p);
        let module = if rng.gen_bool(0.5) { Some(*ORIGINS.choose(&mut rng).expect("non-empty")) } else { None };
        let sctx = ScoringContext {
            analysis: &analysis,
            active_module: module,
            used_prompts: &empty,
            config: ScoringConfig::default(),
        };
        let (winner, _) = select_response(pool, &sctx, &filter, &mut rng).map_err(|e| e.to_string())?;
        ensure!(winner.id == "priority", "round {round}: {} beat the priority candidate", winner.id);
    }
    Ok("priority candidate won all 1000 randomized pools".into())
}

pub fn tie_uniformity() -> Result<String, String> {
    let fx = Fixture::new();
    let analysis = fx.engine.analyzer.analyze_text("hello there");
    let filter = ContentFilter::default();
    let empty = BTreeSet::new();
    let sctx = ScoringContext {
        analysis: &analysis,
        active_module: None,
        used_prompts: &empty,
        config: ScoringConfig::default(),
    };
    let make = |id: &str| {
        let mut c = ResponseCandidate::new(ModuleId::Base, "same words", 0.5);
        c.id = id.into();
        c
    };
    let n = 10_000;
    let mut first = 0u32;
    for seed in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, trace) = select_response(vec![make("a"), make("b")], &sctx, &filter, &mut rng).map_err(|e| e.to_string())?;
        ensure!(trace.tied == 2, "seed {seed}: {} tied, expected 2", trace.tied);
        if w.id == "a" {
            first += 1;
        }
    }
    let share = first as f64 / n as f64;
    let expected = n as f64 / 2.0;
    let chi2 = (first as f64 - expected).powi(2) / expected + ((n as f64 - first as f64) - expected).powi(2) / expected;
    // 6.635 is the 0.99 quantile of chi-square with one degree of freedom.
    ensure!((0.48..=0.52).contains(&share), "first candidate chosen {:.2}% of the time", share * 100.0);
    ensure!(chi2 < 6.635, "chi-square {chi2:.3} rejects uniformity at p = 0.01");
    Ok(format!("first candidate {:.2}% over {n} selections, chi-square {chi2:.3} (p > 0.01)", share * 100.0))
}

/// Engine whose only flow is the sample flow fixture.
pub fn sample_flow_engine() -> Result<(tempfile::TempDir, Engine), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (mut engine, _) = parlor_core::config::build_engine(&super::config_at(dir.path())).map_err(|e| e.to_string())?;
    let path = fixtures_dir().join("sample_flow.toml");
    let src = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let def = parse_flow("sample_flow.toml", &src, &engine.registry).map_err(|d| format!("{d:?}"))?;
    engine.flows = FlowSet::new([def]);
    Ok((dir, engine))
}

fn letters(s: &str) -> Vec<String> {
    s.chars().map(|c| c.to_string()).collect()
}

pub fn sample_flow_golden() -> Result<String, String> {
    let (_fx, engine) = sample_flow_engine()?;
    let mut s = SessionState::new("sample", 11);
    let run = |s: &SessionState, text: &str| engine.process_turn(s, &AsrInput::text(text)).map_err(|e| e.to_string());

    let r = run(&s, "let's try the sample flow")?;
    ensure!(r.response.origin == ModuleId::Flow, "entry answered by {}", r.response.origin);
    ensure!(r.expectations == letters("ABCDEFGHIJKLMNOPQRSTUVWXYZ"), "row 1 expecting {:?}", r.expectations);
    s = r.new_state;

    let rows = [
        ("precondition a", "Action A.", "A", "CD"),
        ("precondition c", "Action C.", "C", "BE"),
        ("precondition b", "Action B.", "B", "A"),
    ];
    for (row, (user, reply, var, expecting)) in rows.iter().enumerate() {
        let r = run(&s, user)?;
        let n = 2 * row + 2;
        ensure!(r.response.origin == ModuleId::Flow, "row {n} answered by {}", r.response.origin);
        ensure!(r.reply == *reply, "row {n} said {:?}, expected {reply:?}", r.reply);
        ensure!(r.expectations == letters(expecting), "row {} expecting {:?}, expected {expecting:?}", n + 1, r.expectations);
        let fs = r.new_state.active_flow.as_ref().ok_or_else(|| format!("row {n} left the flow"))?;
        let key = format!("postcondition_{}", var.to_lowercase());
        ensure!(fs.vars.get(&key).map(String::as_str) == Some("done"), "row {n} did not apply {key}");
        s = r.new_state;
    }

    let r = run(&s, "no precondition")?;
    ensure!(r.trace.flow_exit, "row 8 did not exit the flow");
    ensure!(r.new_state.active_flow.is_none(), "row 8 left a flow active");
    ensure!(r.response.origin != ModuleId::Flow, "row 8 answered from the flow");
    Ok("rows 1-8 reproduced; expecting {A..Z}, {C,D}, {B,E}, {A}; exit on unmatched turn".into())
}

fn expected_rule(src: &str) -> Option<String> {
    src.lines().next()?.strip_prefix("# expect: ").map(|r| r.trim().to_string())
}

pub fn flow_validator() -> Result<String, String> {
    let registry = FunctionRegistry::builtin();
    let broken = fixtures_dir().join("broken");
    let mut rules = BTreeSet::new();
    let mut files = 0;
    let mut entries: Vec<_> = std::fs::read_dir(&broken).map_err(|e| e.to_string())?.filter_map(Result::ok).collect();
    entries.sort_by_key(|e| e.path());
    for entry in entries {
        let path = entry.path();
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        if path.is_dir() {
            let errs = match load_flows(&path, &registry) {
                Ok(_) => return Err(format!("{name} loaded")),
                Err(d) => d,
            };
            ensure!(errs.iter().any(|d| d.rule == "duplicate-flow-id"), "{name}: {errs:?}");
            rules.insert("duplicate-flow-id".to_string());
            files += 1;
            continue;
        }
        let src = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let want = expected_rule(&src).ok_or_else(|| format!("{name} has no expect line"))?;
        let diags = match parse_flow(&name, &src, &registry) {
            Ok(_) => return Err(format!("{name} loaded")),
            Err(d) => d,
        };
        ensure!(
            !diags.is_empty() && diags.iter().all(|d| d.rule == want && d.line > 0),
            "{name}: expected only [{want}], got {:?}",
            diags.iter().map(|d| d.rule.as_str()).collect::<Vec<_>>()
        );
        rules.insert(want);
        files += 1;
    }
    ensure!(files >= 10, "only {files} broken flows");
    for required in ["unreachable-node", "dangling-expectation", "duplicate-node", "duplicate-flow-id", "unbound-template-var", "unknown-delegate"] {
        ensure!(rules.contains(required), "no fixture for {required}");
    }

    let flows = load_flows(&super::data_dir().join("flows"), &registry).map_err(|d| format!("shipped flows: {d:?}"))?;
    ensure!(flows.len() >= 5, "only {} shipped flows", flows.len());

    let fx = Fixture::new();
    let walked = random_walk(&fx.engine, 10_000, 0x5EED)?;
    Ok(format!(
        "{files} broken flows rejected with {} distinct rule ids; {} shipped flows clean; {walked} random-walk turns",
        rules.len(),
        flows.len()
    ))
}

fn apply(engine: &Engine, session: &SessionState, c: &ResponseCandidate) -> Result<SessionState, String> {
    let analysis = engine.analyzer.analyze_text("okay");
    let mut event = TurnEvent::new(session.session_id.clone());
    for u in &c.postconditions {
        match u {
            StateUpdate::CallFunction { name } => event.updates.extend(engine.registry.call_action(name, &analysis, session)),
            other => event.updates.push(other.clone()),
        }
    }
    let mut next = session.stm_update(&event).map_err(|e| e.to_string())?;
    next.activity = None;
    Ok(next)
}

/// Walks random edges of every shipped flow, entering a fresh flow whenever
/// the current one ends. Returns the number of steps taken.
pub fn random_walk(engine: &Engine, steps: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = engine.flows.ids().map(str::to_string).collect();
    let fresh = |rng: &mut ChaCha8Rng| {
        let mut s = SessionState::new("walk", rng.gen());
        s.agent_profile = OpinionProfile::seed(&engine.packs.opinions, None, rng.gen());
        s
    };
    let mut session = fresh(&mut rng);
    let analysis = engine.analyzer.analyze_text("okay");
    let mut visited: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for step in 0..steps {
        let ctx = module_ctx(engine, &analysis, &session);
        let live = session
            .active_flow
            .as_ref()
            .filter(|fs| engine.flows.get(&fs.flow_id).and_then(|d| d.node(&fs.node)).is_some_and(|n| !n.edges.is_empty()));
        let c = match live {
            Some(fs) => {
                let def = engine.flows.get(&fs.flow_id).ok_or("flow vanished")?;
                let node = def.node(&fs.node).ok_or("node vanished")?;
                let edge = rng.gen_range(0..node.edges.len());
                follow_edge(&ctx, def, fs, edge).map_err(|e| format!("step {step}: {e}"))?
            }
            None => {
                let id = ids.choose(&mut rng).ok_or("no flows")?;
                let def = engine.flows.get(id).ok_or("flow vanished")?;
                match enter_flow(&ctx, def, 1.0).map_err(|e| format!("step {step}: {e}"))? {
                    Some(c) => c,
                    None => {
                        session = fresh(&mut rng);
                        continue;
                    }
                }
            }
        };
        ensure!(!c.text.contains('{') && !c.text.trim().is_empty(), "step {step}: bad render {:?}", c.text);
        session = apply(engine, &session, &c)?;
        if let Some(fs) = &session.active_flow {
            visited.entry(fs.flow_id.clone()).or_default().insert(fs.node.clone());
        }
    }
    ensure!(visited.len() == ids.len(), "walk reached only {} of {} flows", visited.len(), ids.len());
    Ok(steps)
}

/// Minimax value of a normal-play Nim position for the player to move.
fn nim_wins(piles: &[u32], memo: &mut HashMap<Vec<u32>, bool>) -> bool {
    let mut key = piles.to_vec();
    key.sort_unstable();
    if let Some(v) = memo.get(&key) {
        return *v;
    }
    let mut win = false;
    'outer: for i in 0..key.len() {
        for take in 1..=key[i] {
            let mut next = key.clone();
            next[i] -= take;
            if !nim_wins(&next, memo) {
                win = true;
                break 'outer;
            }
        }
    }
    memo.insert(key, win);
    win
}

pub fn nim_oracle() -> Result<String, String> {
    let started = Instant::now();
    let mut memo = HashMap::new();
    let mut positions = 0;
    let mut winning = 0;
    for len in 1..=3usize {
        let total = 8u32.pow(len as u32);
        for code in 0..total {
            let piles: Vec<u32> = (0..len).map(|i| (code / 8u32.pow(i as u32)) % 8).collect();
            if piles.iter().all(|p| *p == 0) {
                continue;
            }
            positions += 1;
            let (pile, take) = nim_move(&piles).map_err(|e| format!("{piles:?}: {e}"))?;
            ensure!(pile < piles.len() && take >= 1 && take <= piles[pile], "{piles:?}: illegal move ({pile}, {take})");
            let mut next = piles.clone();
            next[pile] -= take;
            if nim_wins(&piles, &mut memo) {
                winning += 1;
                ensure!(!nim_wins(&next, &mut memo), "{piles:?} is a win but ({pile}, {take}) hands it over");
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    Ok(format!("{positions} positions ({winning} winning) match minimax in {elapsed:?}"))
}

fn bm25_oracle_scores(docs: &[Vec<String>], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let terms: BTreeSet<&String> = query.iter().collect();
    docs.iter()
        .map(|d| {
            let mut score = 0.0;
            for t in &terms {
                let df = docs.iter().filter(|x| x.contains(t)).count() as f64;
                let tf = d.iter().filter(|w| w == t).count() as f64;
                if df == 0.0 || tf == 0.0 {
                    continue;
                }
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avgdl));
            }
            score
        })
        .collect()
}

fn bm25_oracle_rank(scores: &[f64], keep: impl Fn(usize) -> bool) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = scores.iter().copied().enumerate().filter(|(i, s)| *s > 0.0 && keep(*i)).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
    ranked
}

fn same_ranking(got: &[(usize, f64)], want: &[(usize, f64)]) -> Result<(), String> {
    ensure!(got.len() == want.len(), "{} hits, oracle {}", got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        ensure!((g.1 - w.1).abs() < EPS, "score {} vs oracle {}", g.1, w.1);
        ensure!(g.0 == w.0 || (g.1 - w.1).abs() < 1e-12, "doc {} vs oracle {}", g.0, w.0);
    }
    Ok(())
}

pub fn bm25_oracle() -> Result<String, String> {
    let (k1, b) = (1.2, 0.75);
    let vocab: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
    let split = |s: &str| -> Vec<String> { s.split_whitespace().map(str::to_string).collect() };
    let mut rng = ChaCha8Rng::seed_from_u64(0xB325);
    let mut queries = 0;
    for corpus in 0..100 {
        let n = rng.gen_range(1..=20);
        let docs: Vec<Vec<String>> = (0..n)
            .map(|_| (0..rng.gen_range(1..=8)).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect())
            .collect();
        let topics: Vec<&str> = (0..n).map(|_| if rng.gen_bool(0.5) { "t0" } else { "t1" }).collect();
        let turn_docs = docs
            .iter()
            .enumerate()
            .map(|(i, d)| TurnDocument {
                id: format!("d{i}"),
                stimulus: d.join(" "),
                response: format!("r{i}"),
                topic: topics[i].to_string(),
            })
            .collect();
        let index = Bm25Index::build(turn_docs, &split, k1, b).map_err(|e| e.to_string())?;
        for q in 0..100 {
            let mut query: Vec<String> = (0..rng.gen_range(1..=4)).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect();
            if rng.gen_bool(0.2) {
                query.push("unseen".into());
            }
            let scores = bm25_oracle_scores(&docs, &query, k1, b);
            same_ranking(&index.search(&query, None, n), &bm25_oracle_rank(&scores, |_| true))
                .map_err(|e| format!("corpus {corpus} query {q} {query:?}: {e}"))?;
            same_ranking(&index.search(&query, Some("t0"), n), &bm25_oracle_rank(&scores, |i| topics[i] == "t0"))
                .map_err(|e| format!("corpus {corpus} query {q} {query:?} topic t0: {e}"))?;
            queries += 1;
        }
    }
    Ok(format!("{queries} queries over 100 corpora rank identically to exhaustive scoring"))
}

pub const REPLAY_SCRIPTS: &[&str] = &["opinions", "question_answering", "science_recursion", "would_you_rather"];

pub fn replay_path(name: &str) -> std::path::PathBuf {
    fixtures_dir().join("replays").join(format!("{name}.json"))
}

pub fn transcript_replays() -> Result<String, String> {
    let fx = Fixture::new();
    let svc = fx.service();
    let mut turns = 0;
    for name in REPLAY_SCRIPTS {
        let src = std::fs::read_to_string(replay_path(name)).map_err(|e| e.to_string())?;
        let script = parse_script(&src).map_err(|e| format!("{name}: {e}"))?;
        let report = run_script(&mut ServiceDriver { service: &svc }, &script).map_err(|e| format!("{name}: {e}"))?;
        ensure!(report.passed(), "{name}: {:?}", report.failures);
        turns += script.turns.len();
    }
    Ok(format!("{} scripts, {turns} asserted turns: opinions, QA, science recursion, would you rather", REPLAY_SCRIPTS.len()))
}

/// User turns answered by `module` before a cooperative user stops getting
/// more of it.
fn cooperative_run(svc: &Service, opener: &str, module: ModuleId, mut answer: impl FnMut(&SessionState) -> String) -> Result<usize, String> {
    let sid = svc.open_session(OpenRequest { seed: Some(5), ..Default::default() }).map_err(|e| e.to_string())?.session_id;
    let mut input = opener.to_string();
    let mut count = 0;
    for _ in 0..20 {
        let r = svc.turn(&sid, &AsrInput::text(input.clone())).map_err(|e| e.to_string())?;
        if r.response.origin != module {
            break;
        }
        count += 1;
        if r.new_state.activity.is_none() && count > 1 {
            break;
        }
        input = answer(&r.new_state);
    }
    svc.end_session(&sid).map_err(|e| e.to_string())?;
    Ok(count)
}

pub fn engagement() -> Result<String, String> {
    let fx = Fixture::new();
    let svc = fx.service();
    let mut summary = Vec::new();
    for topic in &fx.engine.packs.fact_topics {
        let opener = format!("I like {}", topic.keywords[0]);
        let n = cooperative_run(&svc, &opener, ModuleId::Recursive, |_| "yes".into())?;
        ensure!(n >= 5, "recursion on {} lasted {n} user turns", topic.topic);
        summary.push(format!("{} {n}", topic.topic));
    }
    for survey in &fx.engine.packs.surveys {
        let mut asked = 0;
        let questions = survey.questions.clone();
        let n = cooperative_run(&svc, &survey.triggers[0], ModuleId::Survey, |_| {
            let reply = if asked == 0 {
                "yes".to_string()
            } else {
                questions.get(asked - 1).map(|q| q.options[0].label.clone()).unwrap_or_else(|| "okay".into())
            };
            asked += 1;
            reply
        })?;
        ensure!(n >= 4, "survey {} lasted {n} user turns", survey.id);
        summary.push(format!("{} {n}", survey.id));
    }
    Ok(format!("cooperative users sustain: {}", summary.join(", ")))
}

pub fn memory_tiers() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = super::config_at(dir.path());
    let boot = || -> Result<Service, String> {
        let (engine, store) = parlor_core::config::build_engine(&cfg).map_err(|e| e.to_string())?;
        Ok(Service::new(std::sync::Arc::new(engine), std::sync::Arc::new(store)))
    };
    let open = |svc: &Service, seed: u64| {
        svc.open_session(OpenRequest {
            session_id: None,
            user_id: Some("ada".into()),
            seed: Some(seed),
        })
        .map_err(|e| e.to_string())
    };

    let first = boot()?;
    let s = open(&first, 1)?;
    let reads = first.store().read_count();
    let writes = first.store().write_count();
    let script = [
        "my name is Ada",
        "what's your favorite color",
        "I like video games",
        "building games",
        "tell me some science facts",
        "yes",
        "what is the capitol city of mexico",
        "let's play a game",
        "nim",
        "hello",
    ];
    for t in script {
        first.turn(&s.session_id, &AsrInput::text(t)).map_err(|e| e.to_string())?;
    }
    ensure!(first.store().read_count() == reads, "{} LTM reads during turns", first.store().read_count() - reads);
    ensure!(first.store().write_count() == writes, "{} LTM writes during turns", first.store().write_count() - writes);
    let ended = first.end_session(&s.session_id).map_err(|e| e.to_string())?;
    drop(first);

    let second = boot()?;
    let s2 = open(&second, 2)?;
    ensure!(s2.agent_profile == ended.agent_profile, "profile changed across sessions");
    ensure!(s2.user_name.as_deref() == Some("Ada"), "user name {:?}", s2.user_name);
    ensure!(s2.explored_topics == ended.explored_topics, "explored topics lost");
    let hi = second.turn(&s2.session_id, &AsrInput::text("hello")).map_err(|e| e.to_string())?;
    ensure!(hi.reply.contains("Ada"), "greeting {:?} does not use the stored name", hi.reply);
    drop(second);

    let root = dir.path().join("crash");
    let committed: Vec<LtmRecord> = (0..5)
        .map(|i| LtmRecord::new("trivia", format!("k{i}"), serde_json::json!({"id": format!("k{i}"), "clue": "c", "answer": "a"})))
        .collect();
    {
        let store = LtmStore::open_default(&root).map_err(|e| e.to_string())?;
        for r in &committed {
            store.put(r).map_err(|e| e.to_string())?;
        }
        std::fs::write(root.join("trivia").join(".k9.tmp"), b"{\"namespace\":\"trivia\",\"ke").map_err(|e| e.to_string())?;
    }
    let store = LtmStore::open_default(&root).map_err(|e| e.to_string())?;
    let keys = store.keys("trivia").map_err(|e| e.to_string())?;
    ensure!(keys == ["k0", "k1", "k2", "k3", "k4"], "recovered keys {keys:?}");
    for r in &committed {
        let got = store.get("trivia", &r.key).map_err(|e| e.to_string())?;
        ensure!(got.as_ref() == Some(r), "record {} not recovered intact", r.key);
    }
    Ok(format!(
        "profile and name restored after restart; 0 LTM reads over {} turns; {} committed records survive a torn write",
        script.len(),
        committed.len()
    ))
}
