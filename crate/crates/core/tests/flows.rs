//! Flow loading, triggering, edge order and templates.

mod support;

use std::collections::BTreeMap;

use parlor_core::expectation::FunctionRegistry;
use parlor_core::flow::{advance_flow, load_flows, parse_flow, render, trigger_flow, FlowAdvance, FlowSet, FlowState, Template};
use parlor_core::mixed::opinions::OpinionProfile;
use parlor_core::SessionState;
use proptest::prelude::*;

#[test]
fn shipped_flows_register_their_topics() {
    let flows = load_flows(&support::data_dir().join("flows"), &FunctionRegistry::builtin()).unwrap();
    let ids: Vec<&str> = flows.ids().collect();
    for id in ["books", "dinosaurs", "movies", "music", "sports", "video_games"] {
        assert!(ids.contains(&id), "{ids:?}");
    }
    for def in flows.iter() {
        assert!(!def.subroots.is_empty());
        assert!(!def.triggers.is_empty(), "{} has no triggers", def.id);
    }
}

#[test]
fn no_keyword_no_topic_no_starter() {
    let fx = support::Fixture::new();
    let s = SessionState::new("t", 1);
    let a = fx.engine.analyzer.analyze_text("the weather is odd");
    let ctx = support::module_ctx(&fx.engine, &a, &s);
    let c = trigger_flow(&ctx, &fx.engine.flows).unwrap();
    assert!(c.iter().all(|c| !c.id.starts_with("flow:video_games")), "{c:?}");
    let a = fx.engine.analyzer.analyze_text("hmm okay");
    let ctx = support::module_ctx(&fx.engine, &a, &s);
    assert!(trigger_flow(&ctx, &fx.engine.flows).unwrap().is_empty());
}

const ORDERED: &str = r#"
id = "order"
topic = "order"
triggers = ["order"]
subroots = ["start"]

[[expectation]]
id = "pets"
kind = "keyword_set"
words = ["dog", "cat"]

[[expectation]]
id = "dogs"
kind = "keyword_set"
words = ["dog"]

[[node]]
id = "start"
say = "Any pets?"
edges = [{ when = "pets", to = "pets" }, { when = "dogs", to = "dogs" }]

[[node]]
id = "pets"
say = "Pets are great."

[[node]]
id = "dogs"
say = "Dogs are great."
"#;

#[test]
fn first_matching_edge_wins() {
    let fx = support::Fixture::new();
    let registry = FunctionRegistry::builtin();
    let flows = FlowSet::new([parse_flow("order.toml", ORDERED, &registry).unwrap()]);
    let mut s = SessionState::new("t", 1);
    s.agent_profile = OpinionProfile::seed(&fx.engine.packs.opinions, None, 1);
    let state = FlowState::new("order", "start");
    let a = fx.engine.analyzer.analyze_text("I have a dog");
    let ctx = support::module_ctx(&fx.engine, &a, &s);
    match advance_flow(&ctx, &flows, &registry, &state).unwrap() {
        FlowAdvance::Emit(c) => assert_eq!(c.text, "Pets are great."),
        FlowAdvance::Exit => panic!("no edge matched"),
    }
    let a = fx.engine.analyzer.analyze_text("I have a fish");
    let ctx = support::module_ctx(&fx.engine, &a, &s);
    assert_eq!(advance_flow(&ctx, &flows, &registry, &state).unwrap(), FlowAdvance::Exit);
}

proptest! {
    #[test]
    fn template_substitutes_every_var(vals in prop::collection::vec("[a-z ]{0,12}", 1..4), lead in "[A-Za-z ,.]{0,10}") {
        let names: Vec<String> = (0..vals.len()).map(|i| format!("v{i}")).collect();
        let src = format!("{lead}{}", names.iter().map(|n| format!("{{{n}}}")).collect::<Vec<_>>().join("-"));
        let t = Template::parse(&src).unwrap();
        let vars: BTreeMap<String, String> = names.iter().cloned().zip(vals.iter().cloned()).collect();
        prop_assert_eq!(render(&t, &vars).unwrap(), format!("{lead}{}", vals.join("-")));
        let missing = BTreeMap::new();
        prop_assert!(render(&t, &missing).is_err());
    }

    #[test]
    fn template_default_fills_gap(default in "[a-z]{1,8}") {
        let t = Template::parse(&format!("I like {{genre|{default}}} books")).unwrap();
        prop_assert_eq!(render(&t, &BTreeMap::new()).unwrap(), format!("I like {default} books"));
    }
}
