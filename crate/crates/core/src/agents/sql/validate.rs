//! Read-only gate for model-generated SQL.

use std::fmt;

pub const ROW_CAP: usize = 10;

/// Statement keywords never allowed outside string literals.
const FORBIDDEN: &[&str] = &[
    "INSERT",
    "UPDATE",
    "DELETE",
    "DROP",
    "ALTER",
    "PRAGMA",
    "ATTACH",
    "DETACH",
    "CREATE",
    "VACUUM",
    "REINDEX",
    "TRUNCATE",
    "GRANT",
    "REVOKE",
    "BEGIN",
    "COMMIT",
    "ROLLBACK",
    "SAVEPOINT",
    "LOAD_EXTENSION",
];

const AGGREGATES: &[&str] = &["COUNT", "SUM", "AVG", "MIN", "MAX", "TOTAL", "GROUP_CONCAT"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("SQL rejected at '{token}': {reason}")]
pub struct SqlRejection {
    pub token: String,
    pub reason: String,
}

impl SqlRejection {
    fn new(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            token: token.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedSql {
    /// The accepted statement, with `LIMIT 10` appended when it had no
    /// limit and is not a bare aggregate.
    pub statement: String,
    /// The statement up to its last significant token (no trailing
    /// semicolon, comment or appended limit).
    pub body: String,
    pub limit_appended: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str,
    Ident,
    Num,
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    end: usize,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => f.write_str(w),
            Tok::Str => f.write_str("<string>"),
            Tok::Ident => f.write_str("<identifier>"),
            Tok::Num => f.write_str("<number>"),
            Tok::Punct(c) => write!(f, "{c}"),
        }
    }
}

fn tokenize(sql: &str) -> Result<Vec<Token>, SqlRejection> {
    let bytes = sql.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b if b.is_ascii_whitespace() => i += 1,
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                let rest = &sql[i + 2..];
                let close = rest
                    .find("*/")
                    .ok_or_else(|| SqlRejection::new("/*", "unterminated comment"))?;
                i += 2 + close + 2;
            }
            b'\'' | b'"' | b'`' | b'[' => {
                let close = if c == b'[' { b']' } else { c };
                let mut j = i + 1;
                loop {
                    match bytes.get(j) {
                        None => {
                            return Err(SqlRejection::new(
                                (c as char).to_string(),
                                "unterminated quoted text",
                            ))
                        }
                        Some(&b) if b == close => {
                            // doubled quote is an escaped quote
                            if c != b'[' && bytes.get(j + 1) == Some(&close) {
                                j += 2;
                                continue;
                            }
                            break;
                        }
                        Some(_) => j += 1,
                    }
                }
                let tok = if c == b'\'' { Tok::Str } else { Tok::Ident };
                out.push(Token { tok, end: j + 1 });
                i = j + 1;
            }
            b if b.is_ascii_alphabetic() || b == b'_' || b >= 0x80 => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$' || bytes[i] >= 0x80)
                {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Word(sql[start..i].to_ascii_uppercase()),
                    end: i,
                });
            }
            b if b.is_ascii_digit() || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Num, end: i });
            }
            _ => {
                let ch = sql[i..].chars().next().expect("in bounds");
                i += ch.len_utf8();
                out.push(Token {
                    tok: Tok::Punct(ch),
                    end: i,
                });
            }
        }
    }
    Ok(out)
}

fn is_word(t: &Token, w: &str) -> bool {
    matches!(&t.tok, Tok::Word(x) if x == w)
}

/// Accepts exactly one read-only SELECT statement.
pub fn validate_sql(statement: &str) -> Result<ValidatedSql, SqlRejection> {
    let tokens = tokenize(statement)?;
    if tokens.is_empty() {
        return Err(SqlRejection::new("", "empty statement"));
    }
    if let Some(bad) = tokens
        .iter()
        .find(|t| matches!(&t.tok, Tok::Word(w) if FORBIDDEN.contains(&w.as_str())))
    {
        return Err(SqlRejection::new(
            bad.tok.to_string(),
            "only read-only SELECT statements are allowed",
        ));
    }
    if !is_word(&tokens[0], "SELECT") {
        return Err(SqlRejection::new(
            tokens[0].tok.to_string(),
            "statement must start with SELECT",
        ));
    }
    let significant: &[Token] = match tokens.iter().position(|t| t.tok == Tok::Punct(';')) {
        Some(p) if p + 1 < tokens.len() => {
            return Err(SqlRejection::new(";", "multiple statements are not allowed"))
        }
        Some(p) => &tokens[..p],
        None => &tokens,
    };
    let Some(last) = significant.last() else {
        return Err(SqlRejection::new(";", "empty statement"));
    };
    let body = statement[..last.end].to_string();

    let mut depth = 0i32;
    let mut has_limit = false;
    let mut has_group_by = false;
    for (i, t) in significant.iter().enumerate() {
        match &t.tok {
            Tok::Punct('(') => depth += 1,
            Tok::Punct(')') => depth -= 1,
            Tok::Word(w) if depth == 0 && w == "LIMIT" => has_limit = true,
            Tok::Word(w) if depth == 0 && w == "GROUP" => {
                has_group_by |= significant.get(i + 1).is_some_and(|n| is_word(n, "BY"))
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(SqlRejection::new("(", "unbalanced parentheses"));
    }

    let needs_limit = !has_limit && !(is_bare_aggregate(significant) && !has_group_by);
    let (statement, limit_appended) = if needs_limit {
        let tail = if significant.len() < tokens.len() { ";" } else { "" };
        (format!("{body} LIMIT {ROW_CAP}{tail}"), true)
    } else {
        (statement.trim().to_string(), false)
    };
    Ok(ValidatedSql {
        statement,
        body,
        limit_appended,
    })
}

/// True when every top-level select-list item is a single aggregate call,
/// optionally aliased, so the query yields one row.
fn is_bare_aggregate(tokens: &[Token]) -> bool {
    let end = tokens
        .iter()
        .enumerate()
        .scan(0i32, |depth, (i, t)| {
            match t.tok {
                Tok::Punct('(') => *depth += 1,
                Tok::Punct(')') => *depth -= 1,
                _ => {}
            }
            Some((i, *depth, t))
        })
        .find(|(_, d, t)| *d == 0 && is_word(t, "FROM"))
        .map_or(tokens.len(), |(i, _, _)| i);
    let list = &tokens[1..end];
    if list.is_empty() {
        return false;
    }
    let mut items: Vec<&[Token]> = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, t) in list.iter().enumerate() {
        match t.tok {
            Tok::Punct('(') => depth += 1,
            Tok::Punct(')') => depth -= 1,
            Tok::Punct(',') if depth == 0 => {
                items.push(&list[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    items.push(&list[start..]);
    items.iter().all(|item| aggregate_item(item))
}

fn aggregate_item(item: &[Token]) -> bool {
    let [Token { tok: Tok::Word(f), .. }, open, rest @ ..] = item else {
        return false;
    };
    if !AGGREGATES.contains(&f.as_str()) || open.tok != Tok::Punct('(') {
        return false;
    }
    let mut depth = 1;
    let mut close = None;
    for (i, t) in rest.iter().enumerate() {
        match t.tok {
            Tok::Punct('(') => depth += 1,
            Tok::Punct(')') => {
                depth -= 1;
                if depth == 0 {
                    close = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    let Some(close) = close else {
        return false;
    };
    match &rest[close + 1..] {
        [] => true,
        [alias] => matches!(alias.tok, Tok::Word(_) | Tok::Ident),
        [as_kw, alias] => is_word(as_kw, "AS") && matches!(alias.tok, Tok::Word(_) | Tok::Ident),
        _ => false,
    }
}
