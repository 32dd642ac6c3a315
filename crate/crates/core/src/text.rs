//! Tokenization and normalization shared by the analyzers, the retrieval
//! index, the scorer and the game modules.

use std::ops::Range;

use unicode_normalization::UnicodeNormalization;

/// A lowercased word token and the byte range it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: Range<usize>,
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

/// Splits `text` into lowercase word tokens with byte spans into `text`.
///
/// Apostrophes inside a word are kept (`don't`, `i'm`), except a trailing
/// `'s`, which becomes its own token so that `mexico city's` still yields the
/// `city` token.
pub fn tokens_with_spans(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            push_word(text, s, i, &mut out);
        }
    }
    if let Some(s) = start {
        push_word(text, s, text.len(), &mut out);
    }
    out
}

fn push_word(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let raw = &text[start..end];
    let trimmed_front = raw.trim_start_matches(is_apostrophe);
    let start = start + (raw.len() - trimmed_front.len());
    let trimmed = trimmed_front.trim_end_matches(is_apostrophe);
    let end = start + trimmed.len();
    if trimmed.is_empty() {
        return;
    }
    let lower: String = trimmed
        .chars()
        .map(|c| if is_apostrophe(c) { '\'' } else { c })
        .collect::<String>()
        .to_lowercase();

    if lower.len() > 2 && lower.ends_with("'s") {
        // Locate the apostrophe in the raw slice; it may be multi-byte.
        if let Some((pos, _)) = trimmed.char_indices().rev().find(|(_, c)| is_apostrophe(*c)) {
            let stem = &lower[..lower.len() - 2];
            out.push(Token {
                text: stem.to_string(),
                span: start..start + pos,
            });
            out.push(Token {
                text: "'s".to_string(),
                span: start + pos..end,
            });
            return;
        }
    }
    out.push(Token {
        text: lower,
        span: start..end,
    });
}

/// Lowercase word tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    tokens_with_spans(text).into_iter().map(|t| t.text).collect()
}

/// Splits text into sentences on `.`, `!` and `?` followed by whitespace or
/// the end of input. Terminal punctuation stays with its sentence.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    for (i, c) in text.char_indices() {
        if matches!(c, '.' | '!' | '?') {
            let next = i + 1;
            let at_boundary = next >= bytes.len() || bytes[next].is_ascii_whitespace();
            if at_boundary {
                let s = text[start..next].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = next;
            }
        }
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest);
    }
    out
}

/// Lowercases and strips diacritics (`São Paulo` → `sao paulo`).
pub fn fold(text: &str) -> String {
    text.nfd()
        .filter(|c| !unicode_normalization::char::is_combining_mark(*c))
        .collect::<String>()
        .to_lowercase()
}

/// Position of the first occurrence of `phrase` as a contiguous token run.
pub fn find_phrase(tokens: &[String], phrase: &[String]) -> Option<usize> {
    if phrase.is_empty() || phrase.len() > tokens.len() {
        return None;
    }
    (0..=tokens.len() - phrase.len()).find(|&i| tokens[i..i + phrase.len()] == *phrase)
}

pub fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    find_phrase(tokens, phrase).is_some()
}

/// True when `tokens` begins with `phrase`.
pub fn starts_with_phrase(tokens: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && tokens.len() >= phrase.len() && tokens[..phrase.len()] == *phrase
}

pub fn capitalize_first(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn lowercase_first(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Joins items as `a`, `a and b`, or `a, b, and c`.
pub fn join_list(items: &[String], conjunction: &str) -> String {
    match items.len() {
        0 => String::new(),
        1 => items[0].clone(),
        2 => format!("{} {} {}", items[0], conjunction, items[1]),
        n => format!("{}, {} {}", items[..n - 1].join(", "), conjunction, items[n - 1]),
    }
}

/// Jaccard similarity of two sets; defined as 0 when both are empty.
pub fn jaccard<T: Ord>(a: &std::collections::BTreeSet<T>, b: &std::collections::BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// 64-bit FNV-1a, used wherever a hash must stay stable across builds.
pub fn stable_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn possessive_is_split() {
        assert_eq!(tokenize("What is it's population?"), vec!["what", "is", "it", "'s", "population"]);
        assert_eq!(tokenize("Mexico City’s mayor"), vec!["mexico", "city", "'s", "mayor"]);
    }

    #[test]
    fn contractions_stay_whole() {
        assert_eq!(tokenize("I don't know, I'm done."), vec!["i", "don't", "know", "i'm", "done"]);
    }

    #[test]
    fn spans_point_into_source() {
        let text = "Is he tall?";
        for t in tokens_with_spans(text) {
            assert_eq!(text[t.span.clone()].to_lowercase(), t.text);
        }
    }

    #[test]
    fn sentences_keep_decimals_together() {
        assert_eq!(
            split_sentences("The population is 8.8 million. Wow!"),
            vec!["The population is 8.8 million.", "Wow!"]
        );
        assert_eq!(split_sentences("Just a guess. Tell me a story."), vec!["Just a guess.", "Tell me a story."]);
    }

    #[test]
    fn fold_strips_diacritics() {
        assert_eq!(fold("São Paulo"), "sao paulo");
        assert_eq!(fold("Zürich"), "zurich");
    }

    #[test]
    fn join_list_forms() {
        let items: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(join_list(&items, "or"), "a, b, or c");
        assert_eq!(join_list(&items[..2], "and"), "a and b");
    }
}
