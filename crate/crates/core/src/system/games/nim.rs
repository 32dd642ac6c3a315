//! Normal-play Nim: whoever takes the last stone wins.

use serde::{Deserialize, Serialize};

use super::super::{declines, exit, ActivityState};
use super::GameState;
use crate::candidate::{ModuleId, ResponseCandidate, StateUpdate};
use crate::context::ModuleContext;
use crate::text::join_list;

pub const DEFAULT_PILES: [u32; 3] = [3, 4, 5];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NimError {
    #[error("every pile is empty; the game is over")]
    GameOver,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NimState {
    pub piles: Vec<u32>,
}

/// The agent's move as `(pile index, stones taken)`. From a position with
/// nonzero nim-sum it restores a zero nim-sum; otherwise it takes one stone
/// from the first largest pile.
pub fn nim_move(piles: &[u32]) -> Result<(usize, u32), NimError> {
    if piles.iter().all(|p| *p == 0) {
        return Err(NimError::GameOver);
    }
    let x = piles.iter().fold(0, |acc, p| acc ^ p);
    if x != 0 {
        for (i, p) in piles.iter().enumerate() {
            let target = p ^ x;
            if target < *p {
                return Ok((i, p - target));
            }
        }
    }
    let max = *piles.iter().max().expect("non-empty");
    let i = piles.iter().position(|p| *p == max).expect("max exists");
    Ok((i, 1))
}

const NUMBERS: [&str; 11] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];
const ORDINALS: [&str; 5] = ["first", "second", "third", "fourth", "fifth"];

fn number(tok: &str) -> Option<u32> {
    tok.parse().ok().or_else(|| NUMBERS.iter().position(|n| *n == tok).map(|n| n as u32))
}

/// Reads "take 2 from pile 1", "two from the third pile" and similar into
/// `(pile index, count)`. Piles are numbered from one when spoken.
pub fn parse_move(tokens: &[String]) -> Option<(usize, u32)> {
    let mut pile = None;
    let mut pile_pos = None;
    for (i, t) in tokens.iter().enumerate() {
        if let Some(o) = ORDINALS.iter().position(|o| o == t) {
            pile = Some(o);
            pile_pos = Some(i);
            break;
        }
        if t == "pile" {
            if let Some(n) = tokens.get(i + 1).and_then(|n| number(n)) {
                pile = Some((n as usize).checked_sub(1)?);
                pile_pos = Some(i + 1);
                break;
            }
        }
    }
    let count = tokens
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != pile_pos)
        .find_map(|(_, t)| number(t))?;
    Some((pile?, count))
}

fn describe(piles: &[u32]) -> String {
    let items: Vec<String> = piles.iter().map(|p| p.to_string()).collect();
    join_list(&items, "and")
}

fn continuing(piles: Vec<u32>, text: String) -> ResponseCandidate {
    ResponseCandidate::new(ModuleId::Nim, text, 1.0).update(StateUpdate::SetActivity {
        activity: Some(ActivityState::Game(GameState::Nim(NimState { piles }))),
    })
}

pub fn start(base: f64) -> ResponseCandidate {
    let piles = DEFAULT_PILES.to_vec();
    let text = format!(
        "Let's play Nim. There are {} piles with {} stones. On your turn, take as many stones as you like from one pile. Whoever takes the last stone wins. You go first. Which pile, and how many?",
        piles.len(),
        describe(&piles)
    );
    continuing(piles, text)
        .with_base(base)
        .topic("games").update(StateUpdate::MarkTopicExplored { topic: "games".into() })
}

pub fn step(ctx: &ModuleContext, state: &NimState) -> Vec<ResponseCandidate> {
    if declines(ctx.analysis) {
        return vec![exit(ModuleId::Nim, "Okay, we can stop playing. What would you like to talk about?", 1.0)];
    }
    let piles = &state.piles;
    let Some((pile, count)) = parse_move(&ctx.analysis.tokens) else {
        return vec![continuing(
            piles.clone(),
            format!(
                "Tell me a pile and how many stones to take, like two from the first pile. The piles are {}. What's your move?",
                describe(piles)
            ),
        )
        .with_base(0.9)];
    };
    if pile >= piles.len() || count == 0 || count > piles[pile] {
        return vec![continuing(
            piles.clone(),
            format!("That move doesn't work. The piles are {}. What's your move?", describe(piles)),
        )];
    }
    let mut next = piles.clone();
    next[pile] -= count;
    if next.iter().all(|p| *p == 0) {
        return vec![exit(ModuleId::Nim, "You took the last stone. You win! Nice playing.", 1.0)];
    }
    let (ai, ac) = nim_move(&next).expect("some pile is non-empty");
    next[ai] -= ac;
    let mine = format!("I'll take {ac} from pile {}.", ai + 1);
    if next.iter().all(|p| *p == 0) {
        return vec![exit(ModuleId::Nim, &format!("{mine} I took the last stone, so I win! Good game."), 1.0)];
    }
    let text = format!("{mine} Now the piles are {}. Your move?", describe(&next));
    vec![continuing(next, text)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    #[test]
    fn three_four_five_opening() {
        assert_eq!(nim_move(&[3, 4, 5]), Ok((0, 2)));
        assert_eq!(nim_move(&[1]), Ok((0, 1)));
        assert_eq!(nim_move(&[1, 1]), Ok((0, 1)));
        assert_eq!(nim_move(&[0, 0]), Err(NimError::GameOver));
    }

    #[test]
    fn parses_spoken_moves() {
        assert_eq!(parse_move(&tokenize("take 2 from pile 1")), Some((0, 2)));
        assert_eq!(parse_move(&tokenize("two from the third pile")), Some((2, 2)));
        assert_eq!(parse_move(&tokenize("hmm")), None);
    }
}
