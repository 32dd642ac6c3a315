//! Say templates: literal text with `{var}` and `{var|default}` slots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemplatePart {
    Text(String),
    Var { name: String, default: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Template {
    pub parts: Vec<TemplatePart>,
}

impl Template {
    /// Parses a template; `{{` and `}}` are literal braces.
    pub fn parse(src: &str) -> Result<Self, String> {
        let mut parts = Vec::new();
        let mut text = String::new();
        let mut chars = src.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '{' if chars.peek() == Some(&'{') => {
                    chars.next();
                    text.push('{');
                }
                '}' if chars.peek() == Some(&'}') => {
                    chars.next();
                    text.push('}');
                }
                '{' => {
                    let mut slot = String::new();
                    loop {
                        match chars.next() {
                            Some('}') => break,
                            Some('{') | None => return Err(format!("unclosed slot in {src:?}")),
                            Some(c) => slot.push(c),
                        }
                    }
                    let (name, default) = match slot.split_once('|') {
                        Some((n, d)) => (n.trim().to_string(), Some(d.to_string())),
                        None => (slot.trim().to_string(), None),
                    };
                    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                        return Err(format!("bad slot name {name:?}"));
                    }
                    if !text.is_empty() {
                        parts.push(TemplatePart::Text(std::mem::take(&mut text)));
                    }
                    parts.push(TemplatePart::Var { name, default });
                }
                '}' => return Err(format!("stray `}}` in {src:?}")),
                c => text.push(c),
            }
        }
        if !text.is_empty() {
            parts.push(TemplatePart::Text(text));
        }
        Ok(Self { parts })
    }

    /// Slots without a default.
    pub fn required_vars(&self) -> impl Iterator<Item = &str> {
        self.parts.iter().filter_map(|p| match p {
            TemplatePart::Var { name, default: None } => Some(name.as_str()),
            _ => None,
        })
    }
}

/// Fills the slots; returns the first required variable that is unbound.
pub fn render(t: &Template, vars: &BTreeMap<String, String>) -> Result<String, String> {
    let mut out = String::new();
    for p in &t.parts {
        match p {
            TemplatePart::Text(s) => out.push_str(s),
            TemplatePart::Var { name, default } => match (vars.get(name), default) {
                (Some(v), _) => out.push_str(v),
                (None, Some(d)) => out.push_str(d),
                (None, None) => return Err(name.clone()),
            },
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slots_and_defaults() {
        let t = Template::parse("Do you play {game|video games} with {friend}? {{ok}}").unwrap();
        assert_eq!(t.required_vars().collect::<Vec<_>>(), vec!["friend"]);
        let mut vars = BTreeMap::new();
        assert_eq!(render(&t, &vars), Err("friend".to_string()));
        vars.insert("friend".to_string(), "Sam".to_string());
        assert_eq!(render(&t, &vars).unwrap(), "Do you play video games with Sam? {ok}");
    }

    #[test]
    fn malformed_templates_rejected() {
        assert!(Template::parse("hello {name").is_err());
        assert!(Template::parse("hello }").is_err());
        assert!(Template::parse("hello {}").is_err());
    }
}
