//! Topic menu built from flows and activities the user has not explored.

use rand::Rng;

use crate::candidate::{ModuleId, ResponseCandidate, Target};
use crate::flow::FlowSet;
use crate::memory::SessionState;
use crate::packs::Packs;
use crate::system::{activity_targets, target_label, target_topic};
use crate::text::join_list;

pub const MENU_SIZE: usize = 3;
pub const MENU_CONFIDENCE: f64 = 0.5;

/// Every menu-able target: flows in id order, then activities.
pub fn menu_targets(flows: &FlowSet, packs: &Packs) -> Vec<Target> {
    flows
        .ids()
        .map(|id| Target::Flow(id.to_string()))
        .chain(activity_targets(packs))
        .collect()
}

fn label(t: &Target, flows: &FlowSet, packs: &Packs) -> String {
    match t {
        Target::Flow(id) => flows.get(id).map(|f| f.title.clone()).unwrap_or_else(|| id.replace('_', " ")),
        _ => target_label(t, packs),
    }
}

/// Up to `size` targets drawn uniformly without replacement from the
/// unexplored ones, or from all when everything is explored.
pub fn pick_menu<R: Rng + ?Sized>(all: &[Target], session: &SessionState, size: usize, rng: &mut R) -> Vec<Target> {
    let mut pool: Vec<Target> = all
        .iter()
        .filter(|t| !session.explored_topics.contains(&target_topic(t)))
        .cloned()
        .collect();
    if pool.is_empty() {
        pool = all.to_vec();
    }
    let n = size.min(pool.len());
    for i in 0..n {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(n);
    pool
}

pub fn build_topic_menu<R: Rng + ?Sized>(
    session: &SessionState,
    flows: &FlowSet,
    packs: &Packs,
    rng: &mut R,
) -> ResponseCandidate {
    let picks = pick_menu(&menu_targets(flows, packs), session, MENU_SIZE, rng);
    let labels: Vec<String> = picks.iter().map(|t| label(t, flows, packs)).collect();
    let text = if labels.is_empty() {
        "What would you like to talk about?".to_string()
    } else {
        format!("We could talk about {}. What sounds good to you?", join_list(&labels, "or"))
    };
    let mut c = ResponseCandidate::new(ModuleId::Base, text, MENU_CONFIDENCE).expecting("menu.choice");
    c.id = "menu".into();
    c
}
