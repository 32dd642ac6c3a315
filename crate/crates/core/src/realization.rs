//! Surface polish for the winning response: opener variation and
//! pause-only speech markup.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::LazyLock;

use rand::Rng;
use regex::Regex;

use crate::candidate::{Pause, ResponseCandidate};

/// Discourse openers grouped into interchangeable classes.
#[derive(Debug, Clone, Default)]
pub struct OpenerTable {
    classes: BTreeMap<String, Vec<String>>,
    /// (opener, class), longest opener first.
    index: Vec<(String, String)>,
}

impl OpenerTable {
    /// Parses `class<TAB>opener` lines; blank lines and `#` comments ignored.
    pub fn parse(source: &str) -> Self {
        let mut table = Self::default();
        for line in source.lines() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let (Some(class), Some(opener)) = (parts.next(), parts.next()) else {
                log::warn!("opener table: skipping malformed line {line:?}");
                continue;
            };
            let (class, opener) = (class.trim().to_string(), opener.trim().to_string());
            if opener.is_empty() {
                continue;
            }
            table.classes.entry(class.clone()).or_default().push(opener.clone());
            table.index.push((opener, class));
        }
        table.index.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        table
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn class_members(&self, class: &str) -> &[String] {
        self.classes.get(class).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The listed opener that `text` starts with, and its class.
    pub fn opener_of<'a>(&'a self, text: &str) -> Option<(&'a str, &'a str)> {
        self.index.iter().find_map(|(opener, class)| {
            let head = text.get(..opener.len())?;
            let boundary = text[opener.len()..].chars().next().is_none_or(|c| !c.is_alphanumeric());
            (head.eq_ignore_ascii_case(opener) && boundary).then_some((opener.as_str(), class.as_str()))
        })
    }

    /// Swaps a leading opener for another member of its class when the same
    /// opener started one of the `recent` agent turns. Everything after the
    /// opener is preserved byte for byte.
    pub fn vary_opener<R: Rng + ?Sized>(&self, text: &str, recent: &[&str], rng: &mut R) -> String {
        let Some((opener, class)) = self.opener_of(text) else {
            return text.to_string();
        };
        let recent_openers: Vec<&str> = recent.iter().filter_map(|t| self.opener_of(t).map(|(o, _)| o)).collect();
        if !recent_openers.iter().any(|o| o.eq_ignore_ascii_case(opener)) {
            return text.to_string();
        }
        let members = self.class_members(class);
        let mut alternatives: Vec<&String> = members
            .iter()
            .filter(|m| !m.eq_ignore_ascii_case(opener) && !recent_openers.iter().any(|o| o.eq_ignore_ascii_case(m)))
            .collect();
        if alternatives.is_empty() {
            alternatives = members.iter().filter(|m| !m.eq_ignore_ascii_case(opener)).collect();
        }
        if alternatives.is_empty() {
            return text.to_string();
        }
        let alt = alternatives[rng.gen_range(0..alternatives.len())];
        format!("{alt}{}", &text[opener.len()..])
    }
}

/// Removes markup from `text`. Break tags become pauses at their position
/// in the stripped text; every other tag is dropped with its content kept.
fn strip_markup(text: &str) -> (String, Vec<Pause>) {
    static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^<>]*>").expect("static regex"));
    static BREAK_TIME: LazyLock<Regex> = LazyLock::new(|| {
        Regex::new(r#"^<\s*break\b[^>]*\btime\s*=\s*["']?(\d+)\s*(ms|s)?"#).expect("static regex")
    });
    let (tag, break_time) = (&*TAG, &*BREAK_TIME);
    let mut plain = String::with_capacity(text.len());
    let mut pauses = Vec::new();
    let mut last = 0;
    for m in tag.find_iter(text) {
        plain.push_str(&text[last..m.start()]);
        last = m.end();
        let t = m.as_str();
        if t.trim_start_matches('<').trim_start().starts_with("break") {
            let millis = break_time
                .captures(t)
                .and_then(|c| {
                    let n: u32 = c[1].parse().ok()?;
                    Some(if c.get(2).is_some_and(|u| u.as_str() == "s") { n * 1000 } else { n })
                })
                .unwrap_or(500);
            pauses.push(Pause {
                offset: plain.chars().count(),
                millis,
            });
        }
    }
    plain.push_str(&text[last..]);
    let plain = plain.replace('&', "and").replace(['<', '>'], "");
    (plain, pauses)
}

/// Produces the plain and speech-marked forms of a candidate. Pause offsets
/// are character offsets into the plain text; out-of-range offsets are
/// dropped with a warning.
pub fn render_output(c: &ResponseCandidate) -> (String, String) {
    let (plain, mut pauses) = strip_markup(&c.text);
    let len = plain.chars().count();
    for p in &c.ssml_pauses {
        if p.offset > len || p.millis == 0 {
            log::warn!("dropping pause at offset {} ({} ms) in {len}-char reply", p.offset, p.millis);
            continue;
        }
        pauses.push(*p);
    }
    pauses.sort_by_key(|p| p.offset);
    pauses.dedup_by(|b, a| {
        if a.offset == b.offset {
            a.millis = a.millis.max(b.millis);
            true
        } else {
            false
        }
    });

    if pauses.is_empty() {
        return (plain.clone(), plain);
    }
    let mut marked = String::with_capacity(plain.len() + pauses.len() * 24);
    let mut next = pauses.iter().peekable();
    for (i, ch) in plain.chars().enumerate() {
        while next.peek().is_some_and(|p| p.offset == i) {
            let p = next.next().expect("peeked");
            marked.push_str(&format!("<break time=\"{}ms\"/>", p.millis));
        }
        marked.push(ch);
    }
    for p in next {
        marked.push_str(&format!("<break time=\"{}ms\"/>", p.millis));
    }
    (plain, marked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidate::ModuleId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table() -> OpenerTable {
        OpenerTable::parse("# test\nack\tOkay\nack\tAlright\nack\tAll right\nack\tSure\nturn\tWell\nturn\tSo\n")
    }

    #[test]
    fn repeated_opener_is_swapped_within_class() {
        let t = table();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = t.vary_opener("Okay, let's play.", &["Okay, let's play."], &mut rng);
        let (opener, class) = t.opener_of(&out).unwrap();
        assert_eq!(class, "ack");
        assert_ne!(opener, "Okay");
        assert!(out.ends_with(", let's play."));
    }

    #[test]
    fn unlisted_or_fresh_opener_unchanged() {
        let t = table();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(t.vary_opener("Hello there.", &["Hello there."], &mut rng), "Hello there.");
        assert_eq!(t.vary_opener("Okay, go.", &["Well, hmm."], &mut rng), "Okay, go.");
        // word boundary: "Sure" must not match "Surely"
        assert_eq!(t.vary_opener("Surely not.", &["Sure thing."], &mut rng), "Surely not.");
    }

    #[test]
    fn prosody_tags_stripped_breaks_kept() {
        let c = ResponseCandidate::new(
            ModuleId::Storytelling,
            "<prosody rate=\"slow\">Once</prosody> upon a time.<break time=\"1s\"/> The end.",
            1.0,
        );
        let (plain, marked) = render_output(&c);
        assert_eq!(plain, "Once upon a time. The end.");
        assert_eq!(marked, "Once upon a time.<break time=\"1000ms\"/> The end.");
    }

    #[test]
    fn no_pauses_means_identical_forms() {
        let c = ResponseCandidate::new(ModuleId::Base, "Tom & Jerry", 1.0);
        let (plain, marked) = render_output(&c);
        assert_eq!(plain, "Tom and Jerry");
        assert_eq!(plain, marked);
    }

    #[test]
    fn bad_offsets_dropped() {
        let c = ResponseCandidate::new(ModuleId::Base, "Hi. There.", 1.0).pause(3, 400).pause(99, 400);
        let (_, marked) = render_output(&c);
        assert_eq!(marked, "Hi.<break time=\"400ms\"/> There.");
    }
}
