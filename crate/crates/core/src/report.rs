//! Deterministic CSV and JSON artifact writers.
//!
//! CSV is RFC-4180-style with `.` decimal separators and 17 significant
//! digits, so a rerun with the same configuration reproduces files byte for
//! byte. JSON summaries are flat key/value maps (sorted keys) with a `pass`
//! flag the dispatcher turns into the exit status.

use std::io;
use std::path::{Path, PathBuf};

use serde_json::{Map, Number, Value};

/// 17 significant digits, scientific notation.
pub fn format_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column-labelled numeric table serialized as CSV.
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            header: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format_g17(*x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Flat JSON summary builder; keys come out sorted, values appear exactly
/// once.
pub struct Summary {
    map: Map<String, Value>,
}

impl Summary {
    pub fn new(experiment: &str) -> Self {
        let mut map = Map::new();
        map.insert("experiment".into(), Value::String(experiment.into()));
        Self { map }
    }

    pub fn set_f64(&mut self, key: &str, value: f64) -> &mut Self {
        let num = Number::from_f64(value)
            .unwrap_or_else(|| Number::from_f64(0.0).expect("zero is representable"));
        self.map.insert(key.into(), Value::Number(num));
        self
    }

    pub fn set_usize(&mut self, key: &str, value: usize) -> &mut Self {
        self.map.insert(key.into(), Value::Number(value.into()));
        self
    }

    pub fn set_bool(&mut self, key: &str, value: bool) -> &mut Self {
        self.map.insert(key.into(), Value::Bool(value));
        self
    }

    pub fn set_str(&mut self, key: &str, value: &str) -> &mut Self {
        self.map.insert(key.into(), Value::String(value.into()));
        self
    }

    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(&Value::Object(self.map.clone())).expect("flat map");
        text.push('\n');
        text
    }

    pub fn pass(&self) -> bool {
        matches!(self.map.get("pass"), Some(Value::Bool(true)))
    }
}

/// Write text to `dir/name`, creating the directory first; returns the full
/// path.
pub fn write_artifact(dir: &Path, name: &str, content: &str) -> io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content.as_bytes())?;
    Ok(path)
}
