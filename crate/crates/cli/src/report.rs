use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, Format};

/// Version written into every output header. Bump when a column changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Columns of every verification table.
pub const VERIFICATION_COLUMNS: [&str; 7] = [
    "check",
    "anchor",
    "case",
    "computed",
    "reference",
    "tolerance",
    "pass",
];

/// A table of results. Rows with a boolean `pass` cell are graded; the
/// report passes when all graded rows do.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub schema: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: String,
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    columns: &'a [&'static str],
    rows: Vec<serde_json::Map<String, Value>>,
    pass: bool,
}

impl Report {
    pub fn new(schema: &'static str, columns: &[&'static str]) -> Self {
        Report {
            schema,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn verification(schema: &'static str) -> Self {
        Self::new(schema, &VERIFICATION_COLUMNS)
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Appends a verification row graded by `|computed - reference| <= tol`.
    pub fn check(
        &mut self,
        check: &str,
        anchor: &str,
        case: String,
        computed: f64,
        reference: f64,
        tol: f64,
    ) {
        let pass = (computed - reference).abs() <= tol;
        self.push(vec![
            check.into(),
            anchor.into(),
            case.into(),
            num(computed),
            num(reference),
            num(tol),
            pass.into(),
        ]);
    }

    pub fn passed(&self) -> bool {
        let Some(k) = self.columns.iter().position(|&c| c == "pass") else {
            return true;
        };
        self.rows.iter().all(|r| r[k].as_bool() != Some(false))
    }

    pub fn header(&self, hash: &str) -> String {
        format!(
            "# schema={}/{} config={}",
            self.schema, SCHEMA_VERSION, hash
        )
    }

    pub fn write<W: Write>(
        &self,
        mut w: W,
        cfg: &ExperimentConfig,
        hash: &str,
    ) -> anyhow::Result<()> {
        match cfg.format() {
            Format::Csv => {
                writeln!(w, "{}", self.header(hash))?;
                writeln!(w, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    writeln!(w, "{}", cells.join(","))?;
                }
            }
            Format::Json => {
                let rows = self
                    .rows
                    .iter()
                    .map(|r| {
                        self.columns
                            .iter()
                            .map(|c| c.to_string())
                            .zip(r.iter().cloned())
                            .collect()
                    })
                    .collect();
                let doc = JsonReport {
                    schema: format!("{}/{}", self.schema, SCHEMA_VERSION),
                    config_hash: hash,
                    config: cfg,
                    columns: &self.columns,
                    rows,
                    pass: self.passed(),
                };
                serde_json::to_writer_pretty(&mut w, &doc)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// A float cell; non-finite values become empty cells.
pub fn num(x: f64) -> Value {
    // Adding zero turns -0 into 0.
    serde_json::Number::from_f64(x + 0.0).map_or(Value::Null, Value::Number)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => {
            format!("\"{}\"", s.replace('"', "\"\""))
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
