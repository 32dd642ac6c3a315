//! Runs each acceptance check as its own test.

mod support;

use support::criteria;

fn pass(check: criteria::Check) {
    match check() {
        Ok(summary) => println!("{summary}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn confidence_table() {
    pass(criteria::confidence_table);
}

#[test]
fn penalty_pairs() {
    pass(criteria::penalty_pairs);
}

#[test]
fn priority_dominance() {
    pass(criteria::priority_dominance);
}

#[test]
fn tie_uniformity() {
    pass(criteria::tie_uniformity);
}

#[test]
fn sample_flow_golden() {
    pass(criteria::sample_flow_golden);
}

#[test]
fn flow_validator() {
    pass(criteria::flow_validator);
}

#[test]
fn nim_oracle() {
    pass(criteria::nim_oracle);
}

#[test]
fn bm25_oracle() {
    pass(criteria::bm25_oracle);
}

#[test]
fn transcript_replays() {
    pass(criteria::transcript_replays);
}

#[test]
fn engagement() {
    pass(criteria::engagement);
}

#[test]
fn memory_tiers() {
    pass(criteria::memory_tiers);
}
