//! Output directory handling: tables, JSON reports and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    U(u64),
    F(f64),
    S(String),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::U(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::U(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::F(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::S(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::S(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Self::Empty, Into::into)
    }
}

/// Floats are written in shortest round-trip form so rereading is lossless.
fn csv_field(cell: &Cell) -> String {
    match cell {
        Cell::U(v) => v.to_string(),
        // `-0` and `0` compare equal; print one spelling.
        Cell::F(v) if *v == 0.0 => "0e0".into(),
        Cell::F(v) => format!("{v:e}"),
        Cell::Empty => String::new(),
        Cell::S(s) if s.contains([',', '"', '\n', '\r']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::S(s) => s.clone(),
    }
}

fn json_value(cell: &Cell) -> serde_json::Value {
    match cell {
        Cell::U(v) => (*v).into(),
        Cell::F(v) if v.is_finite() => (*v).into(),
        // JSON has no infinities; keep the value readable instead of null.
        Cell::F(v) => format!("{v}").into(),
        Cell::S(s) => s.clone().into(),
        Cell::Empty => serde_json::Value::Null,
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let fields: Vec<String> = row.iter().map(csv_field).collect();
                    out.push_str(&fields.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Vec<serde_json::Value>> =
                    self.rows.iter().map(|r| r.iter().map(json_value).collect()).collect();
                let doc = serde_json::json!({ "columns": self.columns, "rows": rows });
                let mut text = serde_json::to_string_pretty(&doc).expect("tables serialize");
                text.push('\n');
                text
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Written last as `manifest.json`; it is the only file carrying wall-clock
/// timestamps, so every other file is reproducible byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Format,
    pub input: InputDigest,
    pub config: serde_json::Value,
    pub started_at: String,
    pub finished_at: String,
    pub exit_code: i32,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the data files of one run under a single directory.
pub struct OutputDir {
    root: PathBuf,
    format: Format,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            format,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `<stem>.csv` or `<stem>.json` according to the run format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<PathBuf, CliError> {
        let name = format!("{stem}.{}", self.format.extension());
        self.write(&name, table.render(self.format).as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numerical(format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        let mut f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f.write_all(bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.retain(|entry| entry.path != name);
        self.files.push(FileEntry {
            path: name.to_owned(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn finish(self, record: &RunRecord) -> Result<PathBuf, CliError> {
        let path = self.root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(record)
            .map_err(|e| CliError::Numerical(format!("manifest: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
