use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use scatmap::verify::{REPORT_SCHEMA, REPORT_SCHEMA_VERSION};

/// A table with stable column names; missing values are empty cells.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<Cell>>>,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<Cell>>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj = self
                        .header
                        .iter()
                        .zip(r)
                        .map(|(h, c)| (h.clone(), c.as_ref().map_or(Value::Null, Cell::json)))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Column names `prefix1..prefixk`.
pub fn indexed(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

pub fn nums(v: &[f64]) -> Vec<Option<Cell>> {
    v.iter().map(|x| Some(Cell::Num(*x))).collect()
}

pub fn blanks(k: usize) -> Vec<Option<Cell>> {
    vec![None; k]
}

pub struct Writer {
    dir: PathBuf,
    format: Format,
}

impl Writer {
    pub fn new(dir: &Path, format: Format) -> anyhow::Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `<name>.csv` (csv format) and always the JSON report
    /// `<name>.json`, which embeds the resolved config, the summary and, in
    /// json format, the table itself.
    pub fn emit(
        &self,
        name: &str,
        config: &RunConfig,
        table: Option<&Table>,
        summary: Value,
    ) -> anyhow::Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let mut report = json!({
            "schema": REPORT_SCHEMA,
            "schema_version": REPORT_SCHEMA_VERSION,
            "command": name,
            "config": serde_json::to_value(config)?,
            "summary": summary,
        });
        if let Some(t) = table {
            match self.format {
                Format::Csv => {
                    let path = self.path(&format!("{name}.csv"));
                    let mut w = csv::Writer::from_path(&path)
                        .with_context(|| format!("cannot write {}", path.display()))?;
                    w.write_record(&t.header)?;
                    for row in &t.rows {
                        w.write_record(
                            row.iter()
                                .map(|c| c.as_ref().map_or(String::new(), Cell::csv)),
                        )?;
                    }
                    w.flush()?;
                    written.push(path);
                }
                Format::Json => {
                    report["rows"] = t.to_json();
                }
            }
        }
        let path = self.path(&format!("{name}.json"));
        fs::write(&path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
        Ok(written)
    }

    pub fn write_text(&self, name: &str, text: &str) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
