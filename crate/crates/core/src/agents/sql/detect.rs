use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Detected {
    Sql,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqlDetection {
    pub raw_output: String,
    pub detected: Detected,
    /// Present iff `detected` is `Sql`.
    pub statement: Option<String>,
}

/// Strips whitespace, markdown code fences and one pair of matching outer
/// quotes, repeating until nothing changes.
pub fn unwrap_model_output(raw: &str) -> &str {
    let mut s = raw.trim();
    loop {
        let before = s;
        if let Some(rest) = s.strip_prefix("```") {
            // drop an info string such as ```sql
            let body = rest.split_once('\n').map_or(rest, |(_, b)| b);
            s = body.strip_suffix("```").unwrap_or(body).trim();
        }
        let bytes = s.as_bytes();
        if bytes.len() >= 2 {
            let (first, last) = (bytes[0], bytes[bytes.len() - 1]);
            if first == last && (first == b'"' || first == b'\'') {
                s = s[1..s.len() - 1].trim();
            }
        }
        if s == before {
            return s;
        }
    }
}

fn starts_with_select(s: &str) -> bool {
    let Some(head) = s.get(..6) else {
        return false;
    };
    head.eq_ignore_ascii_case("select")
        && !s[6..]
            .chars()
            .next()
            .is_some_and(|c| c.is_alphanumeric() || c == '_')
}

/// Classifies raw model output as SQL or prose. Total: never fails.
pub fn detect_sql(raw_output: &str) -> SqlDetection {
    let body = unwrap_model_output(raw_output);
    let is_sql = starts_with_select(body);
    SqlDetection {
        raw_output: raw_output.to_string(),
        detected: if is_sql { Detected::Sql } else { Detected::Text },
        statement: is_sql.then(|| body.to_string()),
    }
}
