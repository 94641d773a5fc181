use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const REPORT_SCHEMA: &str = "scatmap.report";
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One machine-readable check: what was run, what came out, the bound it
/// was held to, and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub inputs: Value,
    pub measured: Value,
    pub bound: Value,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    /// Passes when `measured <= bound`.
    pub fn at_most(id: impl Into<String>, inputs: Value, measured: f64, bound: f64) -> Self {
        Self {
            id: id.into(),
            inputs,
            measured: Value::from(measured),
            bound: Value::from(bound),
            pass: measured <= bound,
            note: None,
        }
    }

    /// Passes when `measured >= bound`.
    pub fn at_least(id: impl Into<String>, inputs: Value, measured: f64, bound: f64) -> Self {
        Self {
            id: id.into(),
            inputs,
            measured: Value::from(measured),
            bound: Value::from(bound),
            pass: measured >= bound,
            note: None,
        }
    }

    /// A check that could not be evaluated; always fails.
    pub fn failed(id: impl Into<String>, inputs: Value, reason: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            inputs,
            measured: Value::Null,
            bound: Value::Null,
            pass: false,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub schema_version: u32,
    pub pass: bool,
    pub records: Vec<CheckRecord>,
}

impl Default for Report {
    fn default() -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            schema_version: REPORT_SCHEMA_VERSION,
            pass: true,
            records: Vec::new(),
        }
    }
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.pass &= record.pass;
        self.records.push(record);
    }

    pub fn extend(&mut self, other: Report) {
        for r in other.records {
            self.push(r);
        }
    }

    pub fn get(&self, id: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are plain JSON")
    }
}
