//! Machine-readable reports. A report carries the tool version, the
//! subcommand, the seed and the full configuration next to the results, so a
//! rerun with the same inputs reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Plot-ready data series: named columns and rows of numbers or labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Series {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(scalar_text)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 output")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub results: Value,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub series: BTreeMap<String, Series>,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Self {
            tool: "concord",
            version: VERSION,
            command: command.to_string(),
            seed,
            config,
            results: Value::Object(Map::new()),
            series: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// `key,value` rows for the metadata, configuration and results, with
    /// nested keys joined by dots. Series are written separately.
    pub fn to_csv(&self) -> String {
        let mut rows = vec![
            ("tool".to_string(), Value::from(self.tool)),
            ("version".to_string(), Value::from(self.version)),
            ("command".to_string(), Value::from(self.command.clone())),
            ("seed".to_string(), Value::from(self.seed)),
        ];
        flatten("config", &self.config, &mut rows);
        flatten("results", &self.results, &mut rows);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["key", "value"]).expect("in-memory write");
        for (k, v) in rows {
            w.write_record([k, scalar_text(&v)]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 output")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    /// One `<name>.csv` per series.
    pub fn write_series(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
        for (name, s) in &self.series {
            let path = dir.join(format!("{name}.csv"));
            fs::write(&path, s.to_csv()).map_err(|source| CliError::Write { path, source })?;
        }
        Ok(())
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => "NA".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&format!("{prefix}.{k}"), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

/// Serialize any report fragment; all library result types serialize.
pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library results serialize")
}
