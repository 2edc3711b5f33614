//! Report emission: fixed-schema CSV files plus one JSON document that
//! mirrors their content. Numeric CSV fields use Rust's shortest
//! round-trip float formatting, so values re-parse to the exact same
//! doubles and reruns are byte-identical.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use gramdfe_core::CMatrix;

use crate::CliError;

/// Shortest round-trip formatting; integral values keep a trailing ".0" so
/// every numeric field reads back as a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// One CSV file: fixed header plus rows, UTF-8, LF line endings.
pub struct CsvFile {
    pub name: &'static str,
    pub header: &'static str,
    pub rows: Vec<String>,
}

impl CsvFile {
    pub fn contents(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(self.header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }
}

/// Everything a command produces: CSV tables, the mirroring JSON document,
/// and a short human-readable summary for stdout.
pub struct ReportBundle {
    pub csv: Vec<CsvFile>,
    pub json: Value,
    pub summary: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl ReportBundle {
    /// Write the selected outputs into `dir`, creating it if needed.
    /// Returns the list of files written.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<String>, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        if format != OutputFormat::Json {
            for file in &self.csv {
                let path = dir.join(file.name);
                fs::write(&path, file.contents())
                    .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
                written.push(file.name.to_string());
            }
        }
        if format != OutputFormat::Csv {
            let path = dir.join("report.json");
            let mut text = serde_json::to_string_pretty(&self.json)
                .map_err(|e| CliError::input(format!("cannot encode report: {e}")))?;
            text.push('\n');
            fs::write(&path, text)
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
            written.push("report.json".to_string());
        }
        Ok(written)
    }
}

/// A complex matrix as nested [re, im] pairs, mirroring the config encoding.
pub fn matrix_json(m: &CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|i| {
            let row: Vec<Value> = (0..m.cols())
                .map(|j| {
                    let z = m.at(i, j);
                    json!([z.re, z.im])
                })
                .collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}
