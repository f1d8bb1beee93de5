//! Parsers for the coordinator's model outputs. All are total: they return
//! `None` instead of failing so callers can apply their fallbacks.

use serde::{Deserialize, Serialize};

use crate::pyfmt;
use crate::registry::AgentKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Simple,
    Complex,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Simple => "SIMPLE",
            Verdict::Complex => "COMPLEX",
        }
    }
}

fn words(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
}

/// First whole word equal to `complex` or `simple`, ignoring case.
pub fn parse_verdict(raw: &str) -> Option<Verdict> {
    words(raw).find_map(|w| {
        let w = w.to_lowercase();
        match w.as_str() {
            "complex" => Some(Verdict::Complex),
            "simple" => Some(Verdict::Simple),
            _ => None,
        }
    })
}

/// First whole word naming a routable agent kind, ignoring case.
pub fn parse_route(raw: &str) -> Option<AgentKind> {
    words(raw).find_map(|w| {
        let w = w.to_uppercase();
        AgentKind::ROUTABLE.into_iter().find(|k| k.as_str() == w)
    })
}

/// The sub-question list in a decomposition reply: a JSON array of strings
/// or a Python-style list of quoted strings, possibly surrounded by prose.
/// Blank items are dropped; fewer than two remaining items is a failure.
pub fn parse_sub_questions(raw: &str) -> Option<Vec<String>> {
    let start = raw.find('[')?;
    let end = raw.rfind(']')?;
    if end < start {
        return None;
    }
    let list = &raw[start..=end];
    let items = serde_json::from_str::<Vec<String>>(list)
        .ok()
        .or_else(|| pyfmt::parse_list(list))?;
    let items: Vec<String> = items
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    (items.len() >= 2).then_some(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_words() {
        assert_eq!(parse_verdict("COMPLEX"), Some(Verdict::Complex));
        assert_eq!(parse_verdict(" simple."), Some(Verdict::Simple));
        assert_eq!(parse_verdict("Not simple: complex"), Some(Verdict::Simple));
        assert_eq!(parse_verdict("complexity is high"), None);
        assert_eq!(parse_verdict(""), None);
    }

    #[test]
    fn route_words() {
        assert_eq!(parse_route("SQL_AGENT"), Some(AgentKind::SqlAgent));
        assert_eq!(parse_route("Use ir_agent, not SQL_AGENT"), Some(AgentKind::IrAgent));
        assert_eq!(parse_route("SQL_AGENTS"), None);
        assert_eq!(parse_route("COORDINATOR"), None);
        assert_eq!(parse_route("the sql agent"), None);
    }

    #[test]
    fn sub_question_lists() {
        let py = "['What is a bridge?', \"Who's counting?\"]";
        assert_eq!(
            parse_sub_questions(py).unwrap(),
            ["What is a bridge?", "Who's counting?"]
        );
        let js = "Here you go:\n[\"a?\", \"b?\", \"c?\"]\n";
        assert_eq!(parse_sub_questions(js).unwrap(), ["a?", "b?", "c?"]);
        assert_eq!(parse_sub_questions("['only one']"), None);
        assert_eq!(parse_sub_questions("['a', '  ']"), None);
        assert_eq!(parse_sub_questions("no list here"), None);
        assert_eq!(parse_sub_questions("] backwards ["), None);
    }
}
