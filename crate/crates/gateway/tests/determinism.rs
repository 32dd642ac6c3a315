//! Replays must not depend on the surface they run through.

mod common;

#[test]
fn transcripts_identical_across_surfaces() {
    match common::determinism() {
        Ok(summary) => println!("{summary}"),
        Err(e) => panic!("{e}"),
    }
}
