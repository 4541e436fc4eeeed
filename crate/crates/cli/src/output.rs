use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Version suffix shared by every document the CLI emits.
pub const SCHEMA_VERSION: u32 = 1;

/// Result of one subcommand: a JSON document (keys sorted) and the lines of
/// the human summary.
pub struct Report {
    fields: Map<String, Value>,
    lines: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut fields = Map::new();
        fields.insert("schema".into(), Value::String(format!("handcloud.{command}/{SCHEMA_VERSION}")));
        Report { fields, lines: Vec::new() }
    }

    pub fn field(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.insert(key.into(), value.into());
        self
    }

    pub fn line(&mut self, line: impl Into<String>) -> &mut Self {
        self.lines.push(line.into());
        self
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let mut text = serde_json::to_string_pretty(&Value::Object(self.fields.clone())).expect("plain JSON values");
            text.push('\n');
            text
        } else {
            let mut text = String::new();
            for line in &self.lines {
                let _ = writeln!(text, "{line}");
            }
            text
        }
    }

    pub fn print(&self, json: bool) -> CliResult<()> {
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(self.render(json).as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|source| CliError::Write {
                path: "<stdout>".into(),
                source,
            })
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn path_value(path: &Path) -> Value {
    Value::String(path.display().to_string())
}
