use rusqlite::types::ValueRef;
use rusqlite::Connection;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::sync::Mutex;

use crate::protocol::TableResult;

pub const TABLE_NAME: &str = "bridge_basic_info";

const SCHEMA: &str = "CREATE TABLE bridge_basic_info (
    structure_number TEXT NOT NULL,
    state_name TEXT NOT NULL,
    year_built INTEGER NOT NULL,
    bridge_age INTEGER NOT NULL,
    average_daily_traffic INTEGER NOT NULL
)";

#[derive(Debug, thiserror::Error)]
pub enum DbError {
    #[error("fixture file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("fixture CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("database error: {0}")]
    Sqlite(#[from] rusqlite::Error),
    #[error("statement is not read-only")]
    NotReadOnly,
}

#[derive(Debug, serde::Deserialize)]
struct BridgeRow {
    structure_number: String,
    state_name: String,
    year_built: i64,
    bridge_age: i64,
    average_daily_traffic: i64,
}

/// First word of `sql` after whitespace and comments.
fn leading_keyword(sql: &str) -> &str {
    let mut rest = sql;
    loop {
        rest = rest.trim_start();
        if let Some(r) = rest.strip_prefix("--") {
            rest = r.split_once('\n').map_or("", |(_, after)| after);
        } else if let Some(r) = rest.strip_prefix("/*") {
            rest = r.split_once("*/").map_or("", |(_, after)| after);
        } else {
            break;
        }
    }
    let end = rest
        .find(|c: char| !c.is_ascii_alphabetic())
        .unwrap_or(rest.len());
    &rest[..end]
}

/// In-memory SQLite copy of the bridge fixture, switched to query-only
/// mode once seeded.
#[derive(Debug)]
pub struct BridgeDb {
    conn: Mutex<Connection>,
}

impl BridgeDb {
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, DbError> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader(reader: impl std::io::Read) -> Result<Self, DbError> {
        let mut conn = Connection::open_in_memory()?;
        conn.execute_batch(SCHEMA)?;
        {
            let tx = conn.transaction()?;
            {
                let mut insert = tx.prepare(
                    "INSERT INTO bridge_basic_info VALUES (?1, ?2, ?3, ?4, ?5)",
                )?;
                let mut rdr = csv::Reader::from_reader(reader);
                for row in rdr.deserialize::<BridgeRow>() {
                    let r = row?;
                    insert.execute(rusqlite::params![
                        r.structure_number,
                        r.state_name,
                        r.year_built,
                        r.bridge_age,
                        r.average_daily_traffic
                    ])?;
                }
            }
            tx.commit()?;
        }
        conn.pragma_update(None, "query_only", true)?;
        Ok(Self {
            conn: Mutex::new(conn),
        })
    }

    /// Runs one read-only SELECT, keeping at most `cap` rows.
    /// `truncated` is set when the statement would have produced more.
    /// SQLite reports pragmas as read-only, so the leading keyword is
    /// checked as well.
    pub fn query(&self, sql: &str, cap: usize) -> Result<TableResult, DbError> {
        if !leading_keyword(sql).eq_ignore_ascii_case("select") {
            return Err(DbError::NotReadOnly);
        }
        let conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        let mut batch = rusqlite::Batch::new(&conn, sql);
        let mut stmt = batch.next()?.ok_or(DbError::NotReadOnly)?;
        if batch.next()?.is_some() || !stmt.readonly() {
            return Err(DbError::NotReadOnly);
        }
        let columns: Vec<String> = stmt.column_names().iter().map(|c| c.to_string()).collect();
        let width = columns.len();
        let mut rows = stmt.query([])?;
        let mut out = Vec::new();
        let mut truncated = false;
        while let Some(row) = rows.next()? {
            if out.len() == cap {
                truncated = true;
                break;
            }
            let mut values = Vec::with_capacity(width);
            for i in 0..width {
                values.push(to_json(row.get_ref(i)?));
            }
            out.push(values);
        }
        Ok(TableResult {
            columns,
            rows: out,
            truncated,
        })
    }

    pub fn row_count(&self) -> Result<i64, DbError> {
        let conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        Ok(conn.query_row("SELECT COUNT(*) FROM bridge_basic_info", [], |r| r.get(0))?)
    }

    pub fn count_state(&self, state: &str) -> Result<i64, DbError> {
        let conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        Ok(conn.query_row(
            "SELECT COUNT(*) FROM bridge_basic_info WHERE state_name = ?1",
            [state],
            |r| r.get(0),
        )?)
    }

    /// SHA-256 over the schema and every row in rowid order.
    pub fn content_hash(&self) -> Result<String, DbError> {
        let conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        let mut h = Sha256::new();
        let mut schema = conn.prepare("SELECT type, name, sql FROM sqlite_master ORDER BY name")?;
        let mut rows = schema.query([])?;
        while let Some(r) = rows.next()? {
            for i in 0..3 {
                h.update(format!("{:?}\u{1f}", r.get_ref(i)?).as_bytes());
            }
            h.update(b"\n");
        }
        let mut data = conn.prepare("SELECT * FROM bridge_basic_info ORDER BY rowid")?;
        let width = data.column_count();
        let mut rows = data.query([])?;
        while let Some(r) = rows.next()? {
            for i in 0..width {
                h.update(to_json(r.get_ref(i)?).to_string().as_bytes());
                h.update([0x1f]);
            }
            h.update(b"\n");
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

fn to_json(v: ValueRef<'_>) -> Value {
    match v {
        ValueRef::Null => Value::Null,
        ValueRef::Integer(i) => Value::from(i),
        ValueRef::Real(f) => serde_json::Number::from_f64(f).map_or(Value::Null, Value::Number),
        ValueRef::Text(t) => Value::String(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Value::String(b.iter().map(|x| format!("{x:02x}")).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "structure_number,state_name,year_built,bridge_age,average_daily_traffic\n\
VA1,Virginia,2019,5,100\nVA2,Virginia,1950,74,250000\nOH1,Ohio,1990,34,20\n";

    #[test]
    fn loads_and_counts() {
        let db = BridgeDb::from_csv_reader(CSV.as_bytes()).unwrap();
        assert_eq!(db.row_count().unwrap(), 3);
        assert_eq!(db.count_state("Virginia").unwrap(), 2);
    }

    #[test]
    fn cap_and_truncation() {
        let db = BridgeDb::from_csv_reader(CSV.as_bytes()).unwrap();
        let t = db.query("SELECT structure_number FROM bridge_basic_info", 2).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.truncated);
        let t = db.query("SELECT structure_number FROM bridge_basic_info", 3).unwrap();
        assert!(!t.truncated);
        assert_eq!(t.columns, ["structure_number"]);
    }

    #[test]
    fn writes_are_refused() {
        let db = BridgeDb::from_csv_reader(CSV.as_bytes()).unwrap();
        let before = db.content_hash().unwrap();
        assert!(db.query("DELETE FROM bridge_basic_info", 10).is_err());
        assert!(db.query("SELECT 1; DELETE FROM bridge_basic_info", 10).is_err());
        assert!(db.query("PRAGMA query_only = 0", 10).is_err());
        assert!(db.query("/* x */ -- y\nPRAGMA table_info(bridge_basic_info)", 10).is_err());
        assert_eq!(db.content_hash().unwrap(), before);
    }

    #[test]
    fn leading_keyword_skips_comments() {
        assert_eq!(leading_keyword("  /* a */ -- b\n select 1"), "select");
        assert_eq!(leading_keyword("-- only a comment"), "");
        assert_eq!(leading_keyword("/* unterminated"), "");
        assert_eq!(leading_keyword("SELECT*FROM t"), "SELECT");
    }

    #[test]
    fn aggregate_values_are_json_numbers() {
        let db = BridgeDb::from_csv_reader(CSV.as_bytes()).unwrap();
        let t = db
            .query("SELECT AVG(average_daily_traffic) FROM bridge_basic_info WHERE state_name = 'Virginia'", 10)
            .unwrap();
        assert_eq!(t.rows, vec![vec![serde_json::json!(125050.0)]]);
    }
}
