//! Reflective probes for questions too short to search on.
//!
//! A trimmed rule set: pronoun-swapping templates for self-reference and
//! questions about the agent, with the personal and family prompts of the
//! classic script left out.

use std::sync::LazyLock;

use regex::Regex;

struct Rule {
    pattern: Regex,
    templates: &'static [&'static str],
}

static RULES: LazyLock<Vec<Rule>> = LazyLock::new(|| {
    let rule = |p: &str, templates: &'static [&'static str]| Rule {
        pattern: Regex::new(p).expect("static regex"),
        templates,
    };
    vec![
        rule(r"\byou are (.+)", &["Why do you think I am {0}?"]),
        rule(r"\byou're (.+)", &["Why do you think I am {0}?"]),
        rule(r"\bare you (.+)", &["Why do you want to know whether I am {0}?"]),
        rule(r"\bi am (.+)", &["How long have you been {0}?"]),
        rule(r"\bi'm (.+)", &["How long have you been {0}?"]),
        rule(r"\bwhy don't you (.+)", &["Do you really think I don't {0}?"]),
        rule(r"\bcan you (.+)", &["What makes you think I can't {0}?"]),
        rule(r"\bdo you (.+)", &["Why do you ask whether I {0}?"]),
    ]
});

const DEFAULTS: &[&str] = &[
    "Can you tell me a little more about what you mean?",
    "What makes you ask that?",
    "Interesting question. What got you thinking about that?",
];

const REFLECTIONS: &[(&str, &str)] = &[
    ("i", "you"),
    ("me", "you"),
    ("my", "your"),
    ("mine", "yours"),
    ("am", "are"),
    ("i'm", "you're"),
    ("you", "me"),
    ("your", "my"),
    ("yours", "mine"),
    ("you're", "I'm"),
    ("myself", "yourself"),
    ("yourself", "myself"),
];

fn reflect(fragment: &str) -> String {
    fragment
        .split_whitespace()
        .map(|w| {
            REFLECTIONS
                .iter()
                .find(|(from, _)| *from == w)
                .map(|(_, to)| to.to_string())
                .unwrap_or_else(|| w.to_string())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// A reflective probe for `text`. `turn` rotates the templates so repeated
/// probes vary. The flag is true when a pattern (not a default) matched.
pub fn respond(text: &str, turn: u64) -> (String, bool) {
    let cleaned: String = text
        .to_lowercase()
        .replace('’', "'")
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' || c.is_whitespace() { c } else { ' ' })
        .collect();
    let cleaned = cleaned.split_whitespace().collect::<Vec<_>>().join(" ");
    for rule in RULES.iter() {
        if let Some(caps) = rule.pattern.captures(&cleaned) {
            let fragment = reflect(caps[1].trim());
            if fragment.is_empty() {
                continue;
            }
            let t = rule.templates[(turn as usize) % rule.templates.len()];
            return (t.replace("{0}", &fragment), true);
        }
    }
    (DEFAULTS[(turn as usize) % DEFAULTS.len()].to_string(), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn you_are_smart() {
        assert_eq!(
            respond("Okay, how is it that you are smart?", 0),
            ("Why do you think I am smart?".to_string(), true)
        );
    }

    #[test]
    fn reflection_swaps_pronouns() {
        assert_eq!(respond("i am tired of my job", 0).0, "How long have you been tired of your job?");
    }

    #[test]
    fn falls_back_to_default_probe() {
        let (text, matched) = respond("what?", 1);
        assert!(!matched);
        assert_eq!(text, DEFAULTS[1]);
    }
}
