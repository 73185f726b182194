//! Experiment reports: assertions, CSV tables, and JSON summaries.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One numerical check with its measured value and tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
    pub pass: bool,
}

impl Assertion {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Assertion {
            name: name.into(),
            measured,
            comparison: Comparison::AtMost,
            tolerance,
            pass: measured <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Assertion {
            name: name.into(),
            measured,
            comparison: Comparison::AtLeast,
            tolerance,
            pass: measured >= tolerance,
        }
    }

    /// A boolean check: measured 1 for true, required 1.
    pub fn holds(name: impl Into<String>, value: bool) -> Self {
        Self::at_least(name, if value { 1.0 } else { 0.0 }, 1.0)
    }
}

/// Renders a float so that reruns produce identical bytes.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::invalid(e.to_string()))
    }
}

/// Formats a row of floats with [`fmt_f64`].
pub fn row(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| fmt_f64(*v)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TableSummary {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub mdlab: String,
    pub report_format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Versions {
            mdlab: env!("CARGO_PKG_VERSION").to_string(),
            report_format: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub scenario: String,
    pub suite: String,
    pub passed: bool,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub assertions: Vec<Assertion>,
    pub tables: Vec<TableSummary>,
    pub notes: Vec<String>,
    pub versions: Versions,
    pub generated_at: String,
    #[serde(skip)]
    pub table_data: Vec<Table>,
}

impl ExperimentReport {
    pub fn new(scenario: &str, suite: &str) -> Self {
        ExperimentReport {
            scenario: scenario.to_string(),
            suite: suite.to_string(),
            passed: true,
            parameters: BTreeMap::new(),
            assertions: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
            versions: Versions::default(),
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            table_data: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_string(), v);
    }

    pub fn assert(&mut self, a: Assertion) {
        self.passed &= a.pass;
        self.assertions.push(a);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(TableSummary {
            file: t.file_name(),
            columns: t.header.clone(),
            rows: t.len(),
        });
        self.table_data.push(t);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.pass)
    }

    pub fn find(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes `<root>/<scenario>/<suite>/report.json` and one CSV per table;
    /// returns the suite directory.
    pub fn write(&self, root: &Path) -> Result<PathBuf> {
        let dir = root.join(&self.scenario).join(&self.suite);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for t in &self.table_data {
            let path = dir.join(t.file_name());
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            t.write_csv(std::io::BufWriter::new(file))?;
        }
        let path = dir.join("report.json");
        fs::write(&path, self.to_json()?).map_err(|e| Error::io(&path, e))?;
        Ok(dir)
    }
}
