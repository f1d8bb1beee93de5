//! Natural-language-to-SQL agent over the bridge fixture table.

mod db;
mod detect;
mod validate;

pub use db::{BridgeDb, DbError, TABLE_NAME};
pub use detect::{detect_sql, unwrap_model_output, Detected, SqlDetection};
pub use validate::{validate_sql, SqlRejection, ValidatedSql, ROW_CAP};

use async_trait::async_trait;
use serde_json::Value;
use std::sync::Arc;

use super::{question_arg, DomainAgent};
use crate::protocol::{
    InputSchema, OutputKind, ParamKind, ParamSpec, RpcError, TableResult, ToolCall,
    ToolDescriptor, ToolOutput,
};
use crate::provider::{prompts, ModelProvider};
use crate::pyfmt;
use crate::registry::AgentKind;

pub const TOOL_ANSWER: &str = "sql.answer";

pub const LOG_DETECTED: &str = "Detected valid SQL, executing...";
pub const LOG_NO_SQL: &str = "No SQL detected, returning text answer.";

#[derive(Debug, Clone, PartialEq)]
pub struct SqlAnswer {
    pub text: String,
    pub table: Option<TableResult>,
    pub detection: SqlDetection,
    pub log_lines: Vec<String>,
}

pub struct SqlAgent {
    provider: Arc<dyn ModelProvider>,
    db: Arc<BridgeDb>,
}

impl SqlAgent {
    pub fn new(provider: Arc<dyn ModelProvider>, db: Arc<BridgeDb>) -> Self {
        Self { provider, db }
    }

    pub fn db(&self) -> &BridgeDb {
        &self.db
    }

    /// generate, detect, validate, execute, verbalize. Prose output from
    /// the model is returned as-is; rejected or failing SQL yields an
    /// explanation and no data.
    pub async fn answer(&self, question: &str) -> Result<SqlAnswer, RpcError> {
        let raw = self
            .provider
            .complete(&prompts::sql_generate(question))
            .await
            .map_err(|e| e.to_rpc())?;
        let mut log_lines = vec![format!("Raw LLM output: {}", pyfmt::repr_str(&raw))];
        let detection = detect_sql(&raw);
        let Some(statement) = detection.statement.clone() else {
            log_lines.push(LOG_NO_SQL.to_string());
            return Ok(SqlAnswer {
                text: unwrap_model_output(&raw).to_string(),
                table: None,
                detection,
                log_lines,
            });
        };
        log_lines.push(LOG_DETECTED.to_string());

        let validated = match validate_sql(&statement) {
            Ok(v) => v,
            Err(rejection) => {
                log_lines.push(format!("SQL rejected: {rejection}"));
                return Ok(SqlAnswer {
                    text: format!("The generated SQL was not executed. {rejection}."),
                    table: None,
                    detection,
                    log_lines,
                });
            }
        };
        match self.execute(&validated) {
            Ok(table) => Ok(SqlAnswer {
                text: verbalize(&table),
                table: Some(table),
                detection,
                log_lines,
            }),
            Err(e) => {
                log_lines.push(format!("SQL execution failed: {e}"));
                Ok(SqlAnswer {
                    text: format!("The SQL query could not be executed: {e}."),
                    table: None,
                    detection,
                    log_lines,
                })
            }
        }
    }

    /// Streams the uncapped body and keeps the first `ROW_CAP` rows, so the
    /// result matches the capped statement and `truncated` is exact.
    pub fn execute(&self, validated: &ValidatedSql) -> Result<TableResult, DbError> {
        self.db.query(&validated.body, ROW_CAP)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "NULL".into(),
        other => other.to_string(),
    }
}

pub fn verbalize(table: &TableResult) -> String {
    match (table.rows.len(), table.columns.len()) {
        (0, _) => "The query returned no rows.".into(),
        (1, 1) => format!(
            "The query returned {} = {}.",
            table.columns[0],
            cell(&table.rows[0][0])
        ),
        (n, _) => {
            let mut s = format!(
                "The query returned {n} row{}{}:\n{}",
                if n == 1 { "" } else { "s" },
                if table.truncated {
                    format!(" (showing the first {ROW_CAP})")
                } else {
                    String::new()
                },
                table.columns.join(" | ")
            );
            for row in &table.rows {
                s.push('\n');
                s.push_str(&row.iter().map(cell).collect::<Vec<_>>().join(" | "));
            }
            s
        }
    }
}

#[async_trait]
impl DomainAgent for SqlAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::SqlAgent
    }

    fn tools(&self) -> Vec<ToolDescriptor> {
        vec![ToolDescriptor {
            name: TOOL_ANSWER.into(),
            description: format!(
                "Answer a question by generating and running a read-only SQL query over {TABLE_NAME}"
            ),
            input_schema: InputSchema {
                parameters: vec![ParamSpec::required(
                    "question",
                    ParamKind::String,
                    "natural-language question",
                )],
            },
            output_kind: OutputKind::Table,
        }]
    }

    fn delegate_tool(&self) -> &'static str {
        TOOL_ANSWER
    }

    async fn call_tool(&self, call: &ToolCall) -> Result<ToolOutput, RpcError> {
        let answer = self.answer(question_arg(call)?).await?;
        Ok(ToolOutput {
            text: answer.text,
            table: answer.table,
            citations: Vec::new(),
            log_lines: answer.log_lines,
        })
    }
}
