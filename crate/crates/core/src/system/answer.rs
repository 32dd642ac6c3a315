//! Lenient answer checking for quiz-style games.

use crate::text::{fold, tokenize};

const ARTICLES: &[&str] = &["a", "an", "the"];

fn normalize(text: &str) -> Vec<String> {
    tokenize(&fold(text))
        .into_iter()
        .map(|t| t.chars().filter(|c| c.is_alphanumeric()).collect::<String>())
        .filter(|t| !t.is_empty() && !ARTICLES.contains(&t.as_str()))
        .collect()
}

/// Levenshtein distance over chars.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edits tolerated for a gold word: none up to five letters, one beyond.
pub fn tolerance(word: &str) -> usize {
    if word.chars().count() <= 5 {
        0
    } else {
        1
    }
}

/// Whether `user_text` gives the `gold` answer. Both sides are lowercased,
/// stripped of punctuation, diacritics and articles; every gold word must
/// then appear among the user's words, allowing the per-word tolerance.
pub fn check_answer(user_text: &str, gold: &str) -> bool {
    let gold = normalize(gold);
    let user = normalize(user_text);
    if gold.is_empty() {
        return false;
    }
    gold.iter()
        .all(|g| user.iter().any(|u| edit_distance(g, u) <= tolerance(g)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_cases() {
        assert!(check_answer("mexico city", "Mexico City"));
        assert!(check_answer("great barrier reef", "The Great Barrier Reef"));
        assert!(check_answer("I think it's the Great Barrier Reef!", "The Great Barrier Reef"));
        assert!(!check_answer("parish", "Paris"));
        assert!(check_answer("sao paulo", "São Paulo"));
    }

    #[test]
    fn long_words_tolerate_one_edit() {
        assert!(check_answer("giraffe", "giraffes"));
        assert!(!check_answer("giraff", "giraffes"));
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance("paris", "parish"), 1);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
    }
}
